//! Blocking client for the line protocol, and a runner that plays a
//! [`Policy`] through it with the same per-tick inputs as the in-process loop.

use std::collections::VecDeque;
use std::io::{BufReader, Write};
use std::net::{SocketAddr, TcpStream};

use gridthor_core::nav::{tick_commands, MessageNotice, Policy, PolicyInput};
use gridthor_core::world::{Action, Capability, EpisodeStatus, Event};
use gridthor_core::{Error, ErrorCode, Result};

use crate::frame::{Ack, Act, Body, Frame, Hello, Respond, SendMessage, SessionRole, MAX_FRAME_BYTES};
use crate::transport::{read_line_limited, Line};

fn io_error(e: impl std::fmt::Display) -> Error {
    Error::new(ErrorCode::Io, e.to_string())
}

pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    next_id: i64,
    pushes: VecDeque<Frame>,
}

impl Client {
    pub fn connect(addr: SocketAddr) -> Result<Client> {
        let stream = TcpStream::connect(addr).map_err(io_error)?;
        stream.set_nodelay(true).map_err(io_error)?;
        let writer = stream.try_clone().map_err(io_error)?;
        Ok(Client {
            reader: BufReader::new(stream),
            writer,
            next_id: 1,
            pushes: VecDeque::new(),
        })
    }

    /// Writes a raw line, for exercising the server with arbitrary bytes.
    pub fn send_raw(&mut self, line: &str) -> Result<()> {
        self.writer.write_all(line.as_bytes()).map_err(io_error)?;
        self.writer.write_all(b"\n").map_err(io_error)
    }

    /// Sends a request and returns its id without waiting for the reply.
    pub fn send(&mut self, body: Body) -> Result<i64> {
        let id = self.next_id;
        self.next_id += 1;
        self.send_raw(&Frame::new(id, body).encode())?;
        Ok(id)
    }

    /// Next frame off the wire, whatever it is.
    pub fn read_frame(&mut self) -> Result<Frame> {
        match read_line_limited(&mut self.reader, MAX_FRAME_BYTES).map_err(io_error)? {
            Line::Text(line) => Frame::decode(&line).map_err(|e| e.error),
            Line::TooLong => Err(Error::new(ErrorCode::Parse, "frame exceeds 1 MiB")),
            Line::NotUtf8 => Err(Error::new(ErrorCode::Parse, "frame is not UTF-8")),
            Line::Eof => Err(Error::new(ErrorCode::Io, "connection closed")),
        }
    }

    /// Waits for the ack or error for `id`, queueing pushes seen meanwhile.
    pub fn wait_reply(&mut self, id: i64) -> Result<Ack> {
        loop {
            let f = self.read_frame()?;
            match f.body {
                Body::Ack(ack) if f.id == id => return Ok(*ack),
                Body::Error(e) if f.id == id => return Err(Error::new(e.code, e.message)),
                Body::Error(e) if e.code == ErrorCode::Lagged => return Err(Error::new(e.code, e.message)),
                _ if f.id == crate::frame::PUSH_ID => self.pushes.push_back(f),
                _ => log::debug!("ignoring reply to request {} while waiting for {id}", f.id),
            }
        }
    }

    pub fn request(&mut self, body: Body) -> Result<Ack> {
        let id = self.send(body)?;
        self.wait_reply(id)
    }

    pub fn hello(&mut self, role: SessionRole, capabilities: &[Capability]) -> Result<Ack> {
        let capabilities = capabilities.iter().map(|c| c.as_str().to_string()).collect();
        self.request(Body::Hello(Hello { role, capabilities }))
    }

    /// Next server push, from the queue or the wire.
    pub fn next_push(&mut self) -> Result<Frame> {
        if let Some(f) = self.pushes.pop_front() {
            return Ok(f);
        }
        loop {
            let f = self.read_frame()?;
            if f.id == crate::frame::PUSH_ID {
                return Ok(f);
            }
            if let Some(e) = f.as_error() {
                if e.code == ErrorCode::Lagged {
                    return Err(e);
                }
            }
        }
    }

    /// Sends one policy command as the matching frame type.
    pub fn submit(&mut self, action: Action) -> Result<Ack> {
        let body = match action {
            Action::SendMessage {
                text,
                estimated_position,
            } => Body::SendMessage(SendMessage {
                text,
                estimated_position,
            }),
            Action::Respond { message_id, verdict } => Body::Respond(Respond { message_id, verdict }),
            action => Body::Act(Act { action }),
        };
        self.request(body)
    }
}

/// Plays `policy` on an already joined agent session until the episode
/// ends. Each observation push triggers one decision made from the events
/// and message pushes that preceded it; a decision without a rate-limited
/// action is padded with a noop so lockstep servers can advance.
pub fn run_policy(client: &mut Client, policy: &mut dyn Policy) -> Result<EpisodeStatus> {
    let mut events: Vec<Event> = Vec::new();
    let mut notices: Vec<MessageNotice> = Vec::new();
    loop {
        let f = client.next_push()?;
        match f.body {
            Body::PushTick(t) => {
                if t.status.is_over() {
                    return Ok(t.status);
                }
                events = t.events;
            }
            Body::PushMessage(m) => {
                if let Some(msg) = &m.message {
                    notices.push(MessageNotice::from(msg));
                }
            }
            Body::PushObservation(o) => {
                let input = PolicyInput {
                    observation: &o.observation,
                    events: &events,
                    messages: &notices,
                };
                for a in tick_commands(policy.decide(&input)) {
                    match client.submit(a) {
                        Ok(_) => {}
                        Err(e) if e.code == ErrorCode::TaskOver => break,
                        Err(e) => return Err(e),
                    }
                }
                events.clear();
                notices.clear();
            }
            _ => {}
        }
    }
}
