//! decode(encode(f)) == f over generated frames of every type.

use std::collections::BTreeMap;

use gridthor_core::catalog::ObjectKind;
use gridthor_core::task::{GoalSpec, Placement, Relation, TaskSpec};
use gridthor_core::world::{
    Action, AgentState, Capability, CommMessage, Containment, EpisodeStatus, Event, LocalPatch, MapPayload,
    MessageStatus, MonitorSnapshot, ObjectInstance, Observation, Pose, Role, SeenAgent, SeenObject, Verdict,
};
use gridthor_core::{Cell, ErrorCode, Heading, Rect};
use gridthor_net::frame::*;
use proptest::collection::vec;
use proptest::option;
use proptest::prelude::*;

fn cell() -> impl Strategy<Value = Cell> {
    (-60..60i32, -60..60i32).prop_map(|(x, y)| Cell::new(x, y))
}

fn heading() -> impl Strategy<Value = Heading> {
    (0..8i32).prop_map(|k| Heading::new(k * 45).unwrap())
}

fn pose() -> impl Strategy<Value = Pose> {
    (cell(), heading()).prop_map(|(position, heading)| Pose { position, heading })
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_]{0,10}"
}

fn text() -> impl Strategy<Value = String> {
    "\\PC{0,24}"
}

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |x| x.is_finite())
}

fn rect() -> impl Strategy<Value = Rect> {
    (cell(), 0..6i32, 0..6i32).prop_map(|(c, w, h)| Rect {
        x0: c.x,
        y0: c.y,
        x1: c.x + w,
        y1: c.y + h,
    })
}

fn containment() -> impl Strategy<Value = Containment> {
    prop_oneof![
        Just(Containment::OnFloor),
        ident().prop_map(Containment::Inside),
        ident().prop_map(Containment::HeldBy),
    ]
}

fn object_kind() -> impl Strategy<Value = ObjectKind> {
    prop_oneof![Just(ObjectKind::Target), Just(ObjectKind::Receptacle)]
}

fn seen_object() -> impl Strategy<Value = SeenObject> {
    (ident(), ident(), object_kind(), cell(), containment(), any::<bool>(), any::<bool>(), option::of(rect())).prop_map(
        |(object_id, category, kind, position, containment, is_open, openable, region)| SeenObject {
            object_id,
            category,
            kind,
            position,
            containment,
            is_open,
            openable,
            region,
        },
    )
}

fn object() -> impl Strategy<Value = ObjectInstance> {
    (ident(), ident(), object_kind(), cell(), containment(), any::<bool>(), any::<bool>(), option::of(rect())).prop_map(
        |(object_id, category, kind, position, containment, openable, is_open, region)| ObjectInstance {
            object_id,
            category,
            kind,
            position,
            containment,
            openable,
            is_open,
            region,
        },
    )
}

fn role() -> impl Strategy<Value = Role> {
    prop_oneof![Just(Role::Human), Just(Role::Robot)]
}

fn agent() -> impl Strategy<Value = AgentState> {
    (
        ident(),
        role(),
        pose(),
        option::of(ident()),
        proptest::sample::subsequence(Capability::ALL.to_vec(), 0..=3),
        finite(),
        finite(),
        finite(),
    )
        .prop_map(|(agent_id, role, p, held, caps, d, v, f)| AgentState {
            agent_id,
            role,
            position: p.position,
            heading: p.heading,
            held,
            capabilities: caps.into_iter().collect(),
            detector_range: d,
            view_range: v,
            fov: f,
        })
}

fn patch() -> impl Strategy<Value = LocalPatch> {
    (cell(), 0..6usize).prop_flat_map(|(origin, size)| {
        vec(proptest::string::string_regex(&format!("[.#?]{{{size}}}")).unwrap(), size).prop_map(move |rows| LocalPatch {
            origin,
            size,
            rows,
        })
    })
}

fn observation() -> impl Strategy<Value = Observation> {
    (
        any::<u64>(),
        ident(),
        pose(),
        option::of(ident()),
        patch(),
        vec(seen_object(), 0..3),
        vec((ident(), role(), cell()).prop_map(|(agent_id, role, position)| SeenAgent { agent_id, role, position }), 0..3),
        vec(seen_object(), 0..3),
    )
        .prop_map(|(tick, agent_id, pose, held, local_patch, visible_objects, visible_agents, detections)| Observation {
            tick,
            agent_id,
            pose,
            held,
            local_patch,
            visible_objects,
            visible_agents,
            detections,
        })
}

fn verdict() -> impl Strategy<Value = Verdict> {
    prop_oneof![Just(Verdict::Confirm), Just(Verdict::Decline)]
}

fn message_status() -> impl Strategy<Value = MessageStatus> {
    prop_oneof![
        Just(MessageStatus::Pending),
        Just(MessageStatus::Confirmed),
        Just(MessageStatus::Declined),
        Just(MessageStatus::Superseded),
    ]
}

fn episode_status() -> impl Strategy<Value = EpisodeStatus> {
    prop_oneof![
        Just(EpisodeStatus::Running),
        Just(EpisodeStatus::Success),
        Just(EpisodeStatus::Timeout),
    ]
}

fn action() -> impl Strategy<Value = Action> {
    prop_oneof![
        Just(Action::Noop),
        (finite(), finite()).prop_map(|(a, b)| Action::Move { delta: [a, b] }),
        any::<i32>().prop_map(|dtheta| Action::Rotate { dtheta }),
        ident().prop_map(|object_id| Action::Pick { object_id }),
        ident().prop_map(|receptacle_id| Action::Place { receptacle_id }),
        ident().prop_map(|receptacle_id| Action::Open { receptacle_id }),
        ident().prop_map(|receptacle_id| Action::Close { receptacle_id }),
        (cell(), heading()).prop_map(|(position, heading)| Action::Teleport { position, heading }),
        (text(), cell()).prop_map(|(text, estimated_position)| Action::SendMessage { text, estimated_position }),
        (any::<u64>(), verdict()).prop_map(|(message_id, verdict)| Action::Respond { message_id, verdict }),
    ]
}

fn map_payload() -> impl Strategy<Value = MapPayload> {
    (any::<u64>(), pose(), pose(), cell()).prop_map(|(message_id, human, robot, estimated_position)| MapPayload {
        message_id,
        human,
        robot,
        estimated_position,
    })
}

fn error_code() -> impl Strategy<Value = ErrorCode> {
    proptest::sample::select(vec![
        ErrorCode::BadArg,
        ErrorCode::Collision,
        ErrorCode::OutOfRange,
        ErrorCode::TaskOver,
        ErrorCode::Parse,
        ErrorCode::WrongRole,
        ErrorCode::HumanTaken,
        ErrorCode::Lagged,
        ErrorCode::RateLimit,
        ErrorCode::NoSuchMessage,
    ])
}

fn event() -> impl Strategy<Value = Event> {
    prop_oneof![
        (ident(), cell(), cell()).prop_map(|(agent_id, from, to)| Event::Moved { agent_id, from, to }),
        (ident(), heading()).prop_map(|(agent_id, heading)| Event::Rotated { agent_id, heading }),
        (ident(), cell(), heading()).prop_map(|(agent_id, position, heading)| Event::Teleported {
            agent_id,
            position,
            heading
        }),
        (ident(), ident()).prop_map(|(agent_id, object_id)| Event::Picked { agent_id, object_id }),
        (ident(), ident(), ident()).prop_map(|(agent_id, object_id, receptacle_id)| Event::Placed {
            agent_id,
            object_id,
            receptacle_id
        }),
        (ident(), ident()).prop_map(|(agent_id, receptacle_id)| Event::Opened { agent_id, receptacle_id }),
        (ident(), ident()).prop_map(|(agent_id, receptacle_id)| Event::Closed { agent_id, receptacle_id }),
        (any::<u64>(), ident(), cell()).prop_map(|(message_id, sender, estimated_position)| Event::MessageSent {
            message_id,
            sender,
            estimated_position
        }),
        (any::<u64>(), ident(), message_status(), option::of(map_payload())).prop_map(
            |(message_id, sender, status, map)| Event::MessageResolved {
                message_id,
                sender,
                status,
                map
            }
        ),
        any::<u64>().prop_map(|tick| Event::GoalReached { tick }),
        any::<u64>().prop_map(|tick| Event::Timeout { tick }),
        (ident(), ident(), error_code(), text()).prop_map(|(agent_id, action, code, message)| Event::Rejected {
            agent_id,
            action,
            code,
            message
        }),
    ]
}

fn comm_message() -> impl Strategy<Value = CommMessage> {
    (any::<u64>(), ident(), text(), observation(), cell(), any::<u64>(), message_status(), option::of(any::<u64>()))
        .prop_map(
            |(message_id, sender, text, snapshot, estimated_position, sent_tick, status, resolved_tick)| CommMessage {
                message_id,
                sender,
                text,
                snapshot,
                estimated_position,
                sent_tick,
                status,
                resolved_tick,
            },
        )
}

fn snapshot() -> impl Strategy<Value = MonitorSnapshot> {
    (
        any::<u64>(),
        episode_status(),
        ident(),
        vec("[.#]{0,8}", 0..4),
        vec(object(), 0..3),
        vec(agent(), 0..3),
        proptest::collection::btree_map(ident(), vec(pose(), 0..4), 0..3),
        vec(comm_message(), 0..2),
    )
        .prop_map(|(tick, status, scene_id, grid, objects, agents, trajectories, messages)| MonitorSnapshot {
            tick,
            status,
            scene_id,
            grid,
            objects,
            agents,
            trajectories: trajectories.into_iter().collect::<BTreeMap<_, _>>(),
            messages,
        })
}

fn goal() -> impl Strategy<Value = GoalSpec> {
    prop_oneof![
        ident().prop_map(GoalSpec::navigation),
        (ident(), ident()).prop_map(|(t, r)| GoalSpec::manipulation(t, r)),
    ]
}

fn placement() -> impl Strategy<Value = Placement> {
    (
        ident(),
        ident(),
        proptest::sample::select(Relation::ALL.to_vec()),
        ident(),
        ident(),
        cell(),
    )
        .prop_map(|(object_id, category, relation, reference_category, reference_id, cell)| Placement {
            object_id,
            category,
            relation,
            reference_category,
            reference_id,
            cell,
        })
}

fn task() -> impl Strategy<Value = TaskSpec> {
    (ident(), ident(), ident(), goal(), vec(placement(), 0..3), vec(placement(), 0..3), text(), any::<u64>()).prop_map(
        |(task_id, scene_id, template_id, goal, initial_relations, distractors, nl_description, seed)| TaskSpec {
            task_id,
            scene_id,
            template_id,
            goal,
            initial_relations,
            distractors,
            nl_description,
            seed,
        },
    )
}

fn session_role() -> impl Strategy<Value = SessionRole> {
    prop_oneof![
        Just(SessionRole::Robot),
        Just(SessionRole::Human),
        Just(SessionRole::Monitor),
        Just(SessionRole::Config),
    ]
}

fn config_op() -> impl Strategy<Value = ConfigOp> {
    prop_oneof![
        (ident(), option::of(any::<u64>())).prop_map(|(scene_id, seed)| ConfigOp::SelectScene { scene_id, seed }),
        task().prop_map(|task| ConfigOp::ApplyTask { task }),
        Just(ConfigOp::Reset),
        Just(ConfigOp::Start),
        Just(ConfigOp::Status),
        any::<u8>().prop_map(|score| ConfigOp::Trust { score }),
    ]
}

fn ack() -> impl Strategy<Value = Ack> {
    (
        (
            option::of(any::<u64>()),
            option::of(ident()),
            option::of((ident(), text(), 0..100usize, 0..100usize, finite()).prop_map(
                |(scene_id, name, width, height, cell_size)| SceneSummary {
                    scene_id,
                    name,
                    width,
                    height,
                    cell_size,
                },
            )),
            option::of(any::<u64>()),
            option::of(any::<u64>()),
            option::of((option::of(ident()), option::of(text()), option::of(goal())).prop_map(
                |(task_id, nl_description, goal)| TaskSummary {
                    task_id,
                    nl_description,
                    goal,
                },
            )),
        ),
        (
            option::of(any::<u64>()),
            option::of(observation()),
            option::of(snapshot()),
            option::of(message_status()),
            option::of((any::<bool>(), any::<u64>(), episode_status(), vec(ident(), 0..3)).prop_map(
                |(started, tick, status, agents)| EpisodeInfo {
                    started,
                    tick,
                    status,
                    agents,
                },
            )),
        ),
    )
        .prop_map(
            |(
                (session_id, agent_id, scene, tick_duration_ms, deadline_ticks, task),
                (tick, observation, snapshot, message_status, episode),
            )| Ack {
                session_id,
                agent_id,
                scene,
                tick_duration_ms,
                deadline_ticks,
                task,
                tick,
                observation,
                snapshot,
                message_status,
                episode,
            },
        )
}

fn body() -> impl Strategy<Value = Body> {
    prop_oneof![
        (session_role(), vec("[a-z]{0,12}", 0..4)).prop_map(|(role, capabilities)| Body::Hello(Hello { role, capabilities })),
        action().prop_map(|action| Body::Act(Act { action })),
        Just(Body::Observe),
        (text(), cell()).prop_map(|(text, estimated_position)| Body::SendMessage(SendMessage {
            text,
            estimated_position
        })),
        (any::<u64>(), verdict()).prop_map(|(message_id, verdict)| Body::Respond(Respond { message_id, verdict })),
        any::<u64>().prop_map(|message_id| Body::QueryResponse(QueryResponse { message_id })),
        Just(Body::Monitor),
        config_op().prop_map(Body::Config),
        ack().prop_map(|a| Body::Ack(Box::new(a))),
        (error_code(), text()).prop_map(|(code, message)| Body::Error(ErrorPayload { code, message })),
        (any::<u64>(), episode_status(), vec(event(), 0..4)).prop_map(|(tick, status, events)| Body::PushTick(
            PushTick { tick, status, events }
        )),
        observation().prop_map(|observation| Body::PushObservation(Box::new(PushObservation { observation }))),
        (option::of(comm_message()), option::of(map_payload()))
            .prop_map(|(message, map)| Body::PushMessage(Box::new(PushMessage { message, map }))),
        (any::<u64>(), vec(event(), 0..4), snapshot()).prop_map(|(tick, events, snapshot)| Body::PushEvent(Box::new(
            PushEvent { tick, events, snapshot }
        ))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn every_frame_survives_the_wire(id in any::<i64>(), body in body()) {
        let frame = Frame::new(id, body);
        let line = frame.encode();
        prop_assert!(!line.contains('\n'));
        prop_assert!(line.len() <= MAX_FRAME_BYTES);
        prop_assert_eq!(Frame::decode(&line).unwrap(), frame);
    }
}
