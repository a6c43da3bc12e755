//! Connection plumbing: line-framed TCP sessions, WebSocket sessions carrying
//! one frame per text message, and static file serving on the web port.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, SyncSender, TryRecvError, TrySendError};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use gridthor_core::{Error, ErrorCode};
use tungstenite::protocol::WebSocketConfig;
use tungstenite::Message;

use crate::frame::{Frame, MAX_FRAME_BYTES};
use crate::server::Command;

/// Id echoed on errors for lines whose id could not be read.
pub const UNKNOWN_ID: i64 = -1;

/// A blocked write to a client that stopped reading gives up after this.
const WRITE_TIMEOUT: Duration = Duration::from_secs(10);
/// Poll interval of the single-threaded WebSocket session loop.
const WS_POLL: Duration = Duration::from_millis(5);

/// Sending half of a session's bounded outbound queue.
#[derive(Clone)]
pub(crate) struct Outbound {
    tx: SyncSender<String>,
    lagged: Arc<AtomicBool>,
}

impl Outbound {
    fn new(capacity: usize) -> (Outbound, Receiver<String>, Arc<AtomicBool>) {
        let (tx, rx) = mpsc::sync_channel(capacity.max(1));
        let lagged = Arc::new(AtomicBool::new(false));
        (
            Outbound {
                tx,
                lagged: lagged.clone(),
            },
            rx,
            lagged,
        )
    }

    /// Queues a frame without blocking. Returns false when the queue is full
    /// (the session is then marked lagged) or the connection is gone.
    pub fn send(&self, frame: &Frame) -> bool {
        let mut line = frame.encode();
        if line.len() > MAX_FRAME_BYTES {
            log::error!("dropping oversized {} frame ({} bytes)", frame.body.type_name(), line.len());
            line = Frame::error(frame.id, &Error::new(ErrorCode::Io, "response exceeds 1 MiB")).encode();
        }
        match self.tx.try_send(line) {
            Ok(()) => true,
            Err(TrySendError::Full(_)) => {
                self.lagged.store(true, Ordering::SeqCst);
                false
            }
            Err(TrySendError::Disconnected(_)) => false,
        }
    }
}

/// Closes a connection from outside its threads.
pub(crate) type Closer = Box<dyn Fn() + Send>;

fn closer_for(stream: &TcpStream) -> io::Result<Closer> {
    let s = stream.try_clone()?;
    Ok(Box::new(move || {
        let _ = s.shutdown(Shutdown::Both);
    }))
}

fn lagged_line() -> String {
    Frame::error(
        UNKNOWN_ID,
        &Error::new(ErrorCode::Lagged, "outbound queue overflow; session dropped"),
    )
    .encode()
}

/// Outcome of reading one line with a length cap.
pub(crate) enum Line {
    Text(String),
    TooLong,
    NotUtf8,
    Eof,
}

/// Reads one `\n`-terminated line of at most `max` bytes. Longer lines are
/// consumed up to their newline and reported as `TooLong`.
pub(crate) fn read_line_limited(r: &mut impl BufRead, max: usize) -> io::Result<Line> {
    let mut buf = Vec::new();
    let n = r.by_ref().take(max as u64 + 1).read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(Line::Eof);
    }
    if buf.last() != Some(&b'\n') && buf.len() > max {
        loop {
            let chunk = r.fill_buf()?;
            if chunk.is_empty() {
                break;
            }
            if let Some(i) = chunk.iter().position(|b| *b == b'\n') {
                r.consume(i + 1);
                break;
            }
            let len = chunk.len();
            r.consume(len);
        }
        return Ok(Line::TooLong);
    }
    while matches!(buf.last(), Some(b'\n' | b'\r')) {
        buf.pop();
    }
    Ok(String::from_utf8(buf).map(Line::Text).unwrap_or(Line::NotUtf8))
}

/// Decodes one inbound line and either forwards it to the tick owner or
/// answers the parse error directly. Returns false once the owner is gone.
fn handle_line(line: &str, sid: u64, out: &Outbound, commands: &Sender<Command>) -> bool {
    if line.trim().is_empty() {
        return true;
    }
    match Frame::decode(line) {
        Ok(frame) => commands.send(Command::Frame { sid, frame }).is_ok(),
        Err(e) => {
            out.send(&Frame::error(e.id.unwrap_or(UNKNOWN_ID), &e.error));
            true
        }
    }
}

fn parse_failure(msg: &str) -> Error {
    Error::new(ErrorCode::Parse, msg)
}

/// Starts the reader and writer threads of a line-framed TCP session.
pub(crate) fn spawn_tcp_session(stream: TcpStream, sid: u64, commands: Sender<Command>, capacity: usize) -> io::Result<()> {
    stream.set_nodelay(true)?;
    stream.set_write_timeout(Some(WRITE_TIMEOUT))?;
    let (out, rx, lagged) = Outbound::new(capacity);
    let closer = closer_for(&stream)?;
    let mut write_half = stream.try_clone()?;
    if commands
        .send(Command::Connect {
            sid,
            out: out.clone(),
            closer,
        })
        .is_err()
    {
        return Ok(());
    }
    thread::Builder::new()
        .name(format!("session-{sid}-writer"))
        .spawn(move || {
            for line in rx {
                let result = if lagged.load(Ordering::SeqCst) {
                    let _ = writeln!(write_half, "{}", lagged_line());
                    Err(io::Error::other("lagged"))
                } else {
                    write_half
                        .write_all(line.as_bytes())
                        .and_then(|_| write_half.write_all(b"\n"))
                };
                if result.is_err() {
                    break;
                }
            }
            let _ = write_half.shutdown(Shutdown::Both);
        })?;
    thread::Builder::new()
        .name(format!("session-{sid}-reader"))
        .spawn(move || {
            let mut reader = BufReader::new(stream);
            loop {
                let keep_going = match read_line_limited(&mut reader, MAX_FRAME_BYTES) {
                    Ok(Line::Text(line)) => handle_line(&line, sid, &out, &commands),
                    Ok(Line::TooLong) => {
                        out.send(&Frame::error(UNKNOWN_ID, &parse_failure("frame exceeds 1 MiB")));
                        true
                    }
                    Ok(Line::NotUtf8) => {
                        out.send(&Frame::error(UNKNOWN_ID, &parse_failure("frame is not UTF-8")));
                        true
                    }
                    Ok(Line::Eof) | Err(_) => false,
                };
                if !keep_going {
                    break;
                }
            }
            let _ = commands.send(Command::Disconnect { sid });
        })?;
    Ok(())
}

/// Where the web port finds its static files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Assets {
    /// A small built-in page for poking at the WebSocket endpoint.
    #[default]
    Embedded,
    Dir(PathBuf),
}

const EMBEDDED_INDEX: &str = include_str!("../assets/index.html");

/// Handles one connection on the web port: WebSocket upgrades become
/// sessions, plain GETs are answered from `assets`.
pub(crate) fn handle_web_connection(
    stream: TcpStream,
    sid: u64,
    commands: Sender<Command>,
    capacity: usize,
    assets: &Assets,
) -> io::Result<()> {
    let head = peek_request_head(&stream)?;
    let text = String::from_utf8_lossy(&head).to_ascii_lowercase();
    let is_upgrade = text
        .lines()
        .any(|l| l.starts_with("upgrade:") && l.contains("websocket"));
    if is_upgrade {
        thread::Builder::new()
            .name(format!("session-{sid}-ws"))
            .spawn(move || {
                if let Err(e) = run_ws_session(stream, sid, commands, capacity) {
                    log::debug!("websocket session {sid} ended: {e}");
                }
            })?;
        Ok(())
    } else {
        serve_static(stream, head.len(), &String::from_utf8_lossy(&head), assets)
    }
}

fn peek_request_head(stream: &TcpStream) -> io::Result<Vec<u8>> {
    let deadline = Instant::now() + Duration::from_secs(5);
    let mut buf = vec![0u8; 16 * 1024];
    loop {
        stream.set_read_timeout(Some(Duration::from_millis(200)))?;
        let n = match stream.peek(&mut buf) {
            Ok(n) => n,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => 0,
            Err(e) => return Err(e),
        };
        if let Some(end) = buf[..n].windows(4).position(|w| w == b"\r\n\r\n") {
            stream.set_read_timeout(None)?;
            return Ok(buf[..end + 4].to_vec());
        }
        if n == buf.len() || Instant::now() > deadline {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "incomplete request head"));
        }
        thread::sleep(Duration::from_millis(2));
    }
}

fn run_ws_session(stream: TcpStream, sid: u64, commands: Sender<Command>, capacity: usize) -> io::Result<()> {
    stream.set_nodelay(true)?;
    stream.set_write_timeout(Some(WRITE_TIMEOUT))?;
    let closer = closer_for(&stream)?;
    let raw = stream.try_clone()?;
    let config = WebSocketConfig {
        max_message_size: Some(2 * MAX_FRAME_BYTES),
        ..WebSocketConfig::default()
    };
    let mut ws = tungstenite::accept_with_config(stream, Some(config))
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    raw.set_read_timeout(Some(WS_POLL))?;
    let (out, rx, lagged) = Outbound::new(capacity);
    if commands
        .send(Command::Connect {
            sid,
            out: out.clone(),
            closer,
        })
        .is_err()
    {
        return Ok(());
    }
    'session: loop {
        loop {
            match rx.try_recv() {
                Ok(line) => {
                    if lagged.load(Ordering::SeqCst) {
                        let _ = ws.send(Message::Text(lagged_line()));
                        let _ = ws.close(None);
                        let _ = ws.flush();
                        break 'session;
                    }
                    if ws.send(Message::Text(line)).is_err() {
                        break 'session;
                    }
                }
                Err(TryRecvError::Empty) => break,
                Err(TryRecvError::Disconnected) => {
                    let _ = ws.close(None);
                    let _ = ws.flush();
                    break 'session;
                }
            }
        }
        match ws.read() {
            Ok(Message::Text(text)) => {
                if !handle_line(&text, sid, &out, &commands) {
                    break;
                }
            }
            Ok(Message::Binary(_)) => {
                out.send(&Frame::error(UNKNOWN_ID, &parse_failure("binary messages are not frames")));
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(_) => break,
        }
    }
    let _ = raw.shutdown(Shutdown::Both);
    let _ = commands.send(Command::Disconnect { sid });
    Ok(())
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" | "map" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "ico" => "image/x-icon",
        "wasm" => "application/wasm",
        _ => "application/octet-stream",
    }
}

/// Maps a request path to a relative file path, refusing anything that
/// could escape the asset root.
pub(crate) fn asset_path(request_path: &str) -> Option<PathBuf> {
    let path = request_path.split(['?', '#']).next().unwrap_or("");
    let rel = path.trim_start_matches('/');
    let rel = if rel.is_empty() || rel.ends_with('/') {
        format!("{rel}index.html")
    } else {
        rel.to_string()
    };
    if rel.contains('\\') || rel.contains('%') {
        return None;
    }
    let p = PathBuf::from(rel);
    p.components()
        .all(|c| matches!(c, Component::Normal(_)))
        .then_some(p)
}

fn serve_static(mut stream: TcpStream, head_len: usize, head: &str, assets: &Assets) -> io::Result<()> {
    let mut consumed = vec![0u8; head_len];
    stream.read_exact(&mut consumed)?;
    let mut parts = head.lines().next().unwrap_or("").split_whitespace();
    let method = parts.next().unwrap_or("");
    let target = parts.next().unwrap_or("/");
    let (status, ctype, body): (&str, &str, Vec<u8>) = if method != "GET" && method != "HEAD" {
        ("405 Method Not Allowed", "text/plain", b"method not allowed\n".to_vec())
    } else {
        match asset_path(target).and_then(|rel| load_asset(assets, &rel).map(|b| (rel, b))) {
            Some((rel, bytes)) => ("200 OK", content_type(&rel), bytes),
            None => ("404 Not Found", "text/plain", b"not found\n".to_vec()),
        }
    };
    let header = format!(
        "HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\nContent-Length: {}\r\nCache-Control: no-store\r\nConnection: close\r\n\r\n",
        body.len()
    );
    stream.write_all(header.as_bytes())?;
    if method != "HEAD" {
        stream.write_all(&body)?;
    }
    stream.flush()?;
    let _ = stream.shutdown(Shutdown::Write);
    Ok(())
}

fn load_asset(assets: &Assets, rel: &Path) -> Option<Vec<u8>> {
    match assets {
        Assets::Embedded => (rel == Path::new("index.html")).then(|| EMBEDDED_INDEX.as_bytes().to_vec()),
        Assets::Dir(root) => {
            let full = root.join(rel);
            full.is_file().then(|| std::fs::read(&full).ok()).flatten()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asset_paths_stay_inside_the_root() {
        assert_eq!(asset_path("/"), Some(PathBuf::from("index.html")));
        assert_eq!(asset_path("/app.js?v=3"), Some(PathBuf::from("app.js")));
        assert_eq!(asset_path("/img/"), Some(PathBuf::from("img/index.html")));
        assert_eq!(asset_path("/../etc/passwd"), None);
        assert_eq!(asset_path("/a/../../b"), None);
        assert_eq!(asset_path("/%2e%2e/x"), None);
    }

    #[test]
    fn long_lines_are_skipped_whole() {
        let mut input = "x".repeat(50);
        input.push('\n');
        input.push_str("ok\n");
        let mut r = BufReader::with_capacity(8, input.as_bytes());
        assert!(matches!(read_line_limited(&mut r, 10).unwrap(), Line::TooLong));
        assert!(matches!(read_line_limited(&mut r, 10).unwrap(), Line::Text(s) if s == "ok"));
        assert!(matches!(read_line_limited(&mut r, 10).unwrap(), Line::Eof));
    }

    #[test]
    fn crlf_and_exact_length_lines() {
        let mut r = BufReader::new("abc\r\n0123456789\n".as_bytes());
        assert!(matches!(read_line_limited(&mut r, 10).unwrap(), Line::Text(s) if s == "abc"));
        assert!(matches!(read_line_limited(&mut r, 10).unwrap(), Line::Text(s) if s == "0123456789"));
    }
}
