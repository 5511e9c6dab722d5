//! Messages exchanged over the WebSocket besides snapshots.

use morphoarms::teleop::{Axis, Command, Hand, ProtocolError, SubmitResult, WireCommand, WireTag};
use morphoarms::world::Event;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Operator,
    Observer,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Inbound {
    Hello {
        role: Role,
    },
    Command {
        name: String,
        #[serde(default)]
        axis: Option<Axis>,
        #[serde(default)]
        sign: Option<i8>,
    },
    /// Hand displacement from its home position, meters. `t` is the sample
    /// time in seconds; when absent the server's receive time is used.
    Hand {
        hand: Hand,
        pos: [f64; 3],
        #[serde(default)]
        t: Option<f64>,
    },
    Ping,
}

impl Inbound {
    pub fn parse(text: &str) -> Result<Inbound, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

pub fn decode_command(name: String, axis: Option<Axis>, sign: Option<i8>) -> Result<Command, ProtocolError> {
    Command::try_from(WireCommand {
        kind: WireTag::Command,
        name,
        axis,
        sign,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    ObserverRole,
    StaleSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outbound {
    Welcome {
        role: Role,
    },
    RoleDenied {
        role: Role,
        reason: String,
    },
    /// Reply to a command; `command` is set when a hand gesture produced it.
    Ack {
        result: SubmitResult,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        command: Option<Command>,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
    Event {
        #[serde(flatten)]
        event: Event,
    },
    Pong,
}

impl Outbound {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("outbound message serializes")
    }

    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Outbound::Error {
            code,
            message: message.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use morphoarms::world::EventKind;

    #[test]
    fn parses_inbound_messages() {
        assert_eq!(
            Inbound::parse(r#"{"type":"hello","role":"operator"}"#).unwrap(),
            Inbound::Hello { role: Role::Operator }
        );
        assert_eq!(
            Inbound::parse(r#"{"type":"hand","hand":"left","pos":[0.1,0.2,0.0],"t":3.5}"#).unwrap(),
            Inbound::Hand { hand: Hand::Left, pos: [0.1, 0.2, 0.0], t: Some(3.5) }
        );
        assert_eq!(
            Inbound::parse(r#"{"type":"hand","hand":"right","pos":[0,0,0.2]}"#).unwrap(),
            Inbound::Hand { hand: Hand::Right, pos: [0.0, 0.0, 0.2], t: None }
        );
        match Inbound::parse(r#"{"type":"command","name":"arm_jog","axis":"z","sign":-1}"#).unwrap() {
            Inbound::Command { name, axis, sign } => {
                assert!(matches!(decode_command(name, axis, sign), Ok(Command::ArmJog { .. })));
            }
            other => panic!("{other:?}"),
        }
        assert!(Inbound::parse(r#"{"type":"teleport"}"#).is_err());
        assert!(Inbound::parse("[1,2]").is_err());
    }

    #[test]
    fn outbound_shapes() {
        assert_eq!(
            Outbound::Ack { result: SubmitResult::Accepted, command: None }.to_json(),
            r#"{"type":"ack","result":"accepted"}"#
        );
        assert_eq!(
            Outbound::error(ErrorCode::ObserverRole, "x").to_json(),
            r#"{"type":"error","code":"observer_role","message":"x"}"#
        );
        let event = Outbound::Event { event: Event { t: 2.0, kind: EventKind::Success {} } };
        assert_eq!(event.to_json(), r#"{"type":"event","t":2.0,"kind":"success","payload":{}}"#);
    }
}
