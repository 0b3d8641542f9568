//! DODAG Information Object encoding, including the queue-backlog option.
//!
//! The base object follows the RFC 6550 field order:
//!
//! ```text
//!  0               1               2               3
//! +---------------+---------------+-------------------------------+
//! | RPLInstanceID |Version Number |             Rank              |
//! +-+-+-----+-----+---------------+---------------+---------------+
//! |G|0| MOP | Prf |     DTSN      |     Flags     |   Reserved    |
//! +-+-+-----+-----+---------------+---------------+---------------+
//! |                          DODAGID (16 bytes)                   |
//! +---------------------------------------------------------------+
//! |   Option(s)...
//! ```
//!
//! The queue option is `0xCE`, length `4`, followed by the sender's queue
//! backlog as a big-endian `u32`.

use thiserror::Error;

use crate::ids::NodeId;

pub const BASE_DIO_LEN: usize = 24;
pub const QUEUE_OPTION_TYPE: u8 = 0xCE;
pub const QUEUE_OPTION_PAYLOAD_LEN: u8 = 4;
/// Type byte, length byte and payload.
pub const QUEUE_OPTION_LEN: usize = 2 + QUEUE_OPTION_PAYLOAD_LEN as usize;

const OPT_PAD1: u8 = 0x00;
const OPT_PADN: u8 = 0x01;

const GROUNDED_BIT: u8 = 0b1000_0000;
const MOP_SHIFT: u8 = 3;
const MOP_MASK: u8 = 0b0011_1000;
const PRF_MASK: u8 = 0b0000_0111;

/// Prefix of DODAG ids minted by [`dodag_id_for`]. Unique-local `fd00::/8`
/// with the root's node id in the last four bytes.
const DODAG_ID_PREFIX: [u8; 2] = [0xfd, 0x00];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueOption {
    pub queue_len: u32,
}

impl QueueOption {
    pub fn new(queue_len: u32) -> Self {
        QueueOption { queue_len }
    }

    pub fn option_type(&self) -> u8 {
        QUEUE_OPTION_TYPE
    }

    pub fn option_length(&self) -> u8 {
        QUEUE_OPTION_PAYLOAD_LEN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DioMessage {
    pub rpl_instance_id: u8,
    pub version: u8,
    pub rank: u16,
    /// `G | 0 | MOP(3) | Prf(3)`.
    pub flags_byte: u8,
    pub dtsn: u8,
    pub flags: u8,
    pub reserved: u8,
    pub dodag_id: [u8; 16],
    pub queue_option: Option<QueueOption>,
}

impl DioMessage {
    pub fn grounded(&self) -> bool {
        self.flags_byte & GROUNDED_BIT != 0
    }

    pub fn mode_of_operation(&self) -> u8 {
        (self.flags_byte & MOP_MASK) >> MOP_SHIFT
    }

    pub fn preference(&self) -> u8 {
        self.flags_byte & PRF_MASK
    }

    /// Packs the `G|0|MOP|Prf` byte.
    pub fn pack_flags(grounded: bool, mop: u8, prf: u8) -> u8 {
        (if grounded { GROUNDED_BIT } else { 0 })
            | ((mop << MOP_SHIFT) & MOP_MASK)
            | (prf & PRF_MASK)
    }

    /// Root node named by the DODAG id, if it was minted by [`dodag_id_for`].
    pub fn dodag_root(&self) -> Option<NodeId> {
        root_from_dodag_id(&self.dodag_id)
    }

    pub fn encoded_len(&self) -> usize {
        BASE_DIO_LEN
            + if self.queue_option.is_some() {
                QUEUE_OPTION_LEN
            } else {
                0
            }
    }

    pub fn without_queue_option(mut self) -> Self {
        self.queue_option = None;
        self
    }
}

pub fn dodag_id_for(root: NodeId) -> [u8; 16] {
    let mut id = [0u8; 16];
    id[..2].copy_from_slice(&DODAG_ID_PREFIX);
    id[12..].copy_from_slice(&root.0.to_be_bytes());
    id
}

pub fn root_from_dodag_id(id: &[u8; 16]) -> Option<NodeId> {
    if id[..2] != DODAG_ID_PREFIX || id[2..12].iter().any(|&b| b != 0) {
        return None;
    }
    Some(NodeId(u32::from_be_bytes([id[12], id[13], id[14], id[15]])))
}

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum DioError {
    #[error("DIO truncated: {len} bytes, need at least {BASE_DIO_LEN}")]
    Truncated { len: usize },
    #[error("option 0x{option_type:02x} at offset {offset} is cut short")]
    OptionOverrun { option_type: u8, offset: usize },
    #[error("queue option has length {length}, expected {QUEUE_OPTION_PAYLOAD_LEN}")]
    BadQueueOptionLength { length: u8 },
    #[error("queue option appears more than once")]
    DuplicateQueueOption,
    #[error("unknown option 0x{option_type:02x} at offset {offset}")]
    UnknownOption { option_type: u8, offset: usize },
}

/// How a receiver treats DIO options.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    /// Decode `0xCE` as a queue option. When false the option is foreign to
    /// the receiver, as it is for a plain RPL node.
    pub queue_option_aware: bool,
    /// Skip options whose type is not recognized instead of failing.
    pub accept_unknown_options: bool,
}

impl ParseOptions {
    pub const BRPL: ParseOptions = ParseOptions {
        queue_option_aware: true,
        accept_unknown_options: true,
    };
    pub const RPL: ParseOptions = ParseOptions {
        queue_option_aware: false,
        accept_unknown_options: true,
    };
    pub const STRICT: ParseOptions = ParseOptions {
        queue_option_aware: true,
        accept_unknown_options: false,
    };
}

pub fn serialize_dio(msg: &DioMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(msg.encoded_len());
    write_dio(msg, &mut out);
    out
}

pub fn write_dio(msg: &DioMessage, out: &mut Vec<u8>) {
    out.push(msg.rpl_instance_id);
    out.push(msg.version);
    out.extend_from_slice(&msg.rank.to_be_bytes());
    out.push(msg.flags_byte);
    out.push(msg.dtsn);
    out.push(msg.flags);
    out.push(msg.reserved);
    out.extend_from_slice(&msg.dodag_id);
    if let Some(opt) = msg.queue_option {
        out.push(QUEUE_OPTION_TYPE);
        out.push(QUEUE_OPTION_PAYLOAD_LEN);
        out.extend_from_slice(&opt.queue_len.to_be_bytes());
    }
}

pub fn parse_dio(bytes: &[u8], opts: ParseOptions) -> Result<DioMessage, DioError> {
    if bytes.len() < BASE_DIO_LEN {
        return Err(DioError::Truncated { len: bytes.len() });
    }
    let mut dodag_id = [0u8; 16];
    dodag_id.copy_from_slice(&bytes[8..24]);
    let mut msg = DioMessage {
        rpl_instance_id: bytes[0],
        version: bytes[1],
        rank: u16::from_be_bytes([bytes[2], bytes[3]]),
        flags_byte: bytes[4],
        dtsn: bytes[5],
        flags: bytes[6],
        reserved: bytes[7],
        dodag_id,
        queue_option: None,
    };

    let mut offset = BASE_DIO_LEN;
    while offset < bytes.len() {
        let option_type = bytes[offset];
        if option_type == OPT_PAD1 {
            offset += 1;
            continue;
        }
        let Some(&length) = bytes.get(offset + 1) else {
            return Err(DioError::OptionOverrun {
                option_type,
                offset,
            });
        };
        let body = offset + 2;
        let end = body + length as usize;
        if end > bytes.len() {
            return Err(DioError::OptionOverrun {
                option_type,
                offset,
            });
        }
        match option_type {
            OPT_PADN => {}
            QUEUE_OPTION_TYPE if opts.queue_option_aware => {
                if length != QUEUE_OPTION_PAYLOAD_LEN {
                    return Err(DioError::BadQueueOptionLength { length });
                }
                if msg.queue_option.is_some() {
                    return Err(DioError::DuplicateQueueOption);
                }
                let payload = [bytes[body], bytes[body + 1], bytes[body + 2], bytes[body + 3]];
                msg.queue_option = Some(QueueOption::new(u32::from_be_bytes(payload)));
            }
            _ if opts.accept_unknown_options => {}
            _ => {
                return Err(DioError::UnknownOption {
                    option_type,
                    offset,
                })
            }
        }
        offset = end;
    }
    Ok(msg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(queue: Option<u32>) -> DioMessage {
        DioMessage {
            rpl_instance_id: 30,
            version: 1,
            rank: 0x0280,
            flags_byte: DioMessage::pack_flags(true, 0, 0),
            dtsn: 4,
            flags: 0,
            reserved: 0,
            dodag_id: dodag_id_for(NodeId(3)),
            queue_option: queue.map(QueueOption::new),
        }
    }

    #[test]
    fn golden_queue_option_bytes() {
        let bytes = serialize_dio(&sample(Some(7)));
        assert_eq!(bytes.len(), 30);
        assert_eq!(&bytes[24..], &[0xCE, 0x04, 0x00, 0x00, 0x00, 0x07]);
    }

    #[test]
    fn golden_base_layout() {
        let bytes = serialize_dio(&sample(None));
        let expected: [u8; 24] = [
            30, 1, 0x02, 0x80, 0x80, 4, 0, 0, //
            0xfd, 0x00, 0, 0, 0, 0, 0, 0, //
            0, 0, 0, 0, 0, 0, 0, 3,
        ];
        assert_eq!(bytes, expected);
    }

    #[test]
    fn flags_byte_fields() {
        let b = DioMessage::pack_flags(true, 2, 5);
        let mut m = sample(None);
        m.flags_byte = b;
        assert!(m.grounded());
        assert_eq!(m.mode_of_operation(), 2);
        assert_eq!(m.preference(), 5);
        assert_eq!(b & 0b0100_0000, 0);
    }

    #[test]
    fn rpl_receiver_skips_queue_option() {
        let bytes = serialize_dio(&sample(Some(42)));
        let parsed = parse_dio(&bytes, ParseOptions::RPL).unwrap();
        assert_eq!(parsed, sample(None));
    }

    #[test]
    fn brpl_receiver_reads_queue_option() {
        let bytes = serialize_dio(&sample(Some(42)));
        let parsed = parse_dio(&bytes, ParseOptions::BRPL).unwrap();
        assert_eq!(parsed.queue_option, Some(QueueOption::new(42)));
    }

    #[test]
    fn short_buffer_is_truncated() {
        assert_eq!(
            parse_dio(&[0u8; 10], ParseOptions::BRPL),
            Err(DioError::Truncated { len: 10 })
        );
    }

    #[test]
    fn option_length_past_end() {
        let mut bytes = serialize_dio(&sample(Some(1)));
        bytes.truncate(28);
        assert!(matches!(
            parse_dio(&bytes, ParseOptions::BRPL),
            Err(DioError::OptionOverrun { .. })
        ));
        // length byte itself missing
        let mut bytes = serialize_dio(&sample(None));
        bytes.push(0x77);
        assert!(matches!(
            parse_dio(&bytes, ParseOptions::RPL),
            Err(DioError::OptionOverrun { .. })
        ));
    }

    #[test]
    fn unknown_options_and_padding() {
        let mut bytes = serialize_dio(&sample(Some(9)));
        bytes.extend_from_slice(&[0x00, 0x01, 0x01, 0x00, 0x99, 0x02, 0xAA, 0xBB]);
        let parsed = parse_dio(&bytes, ParseOptions::BRPL).unwrap();
        assert_eq!(parsed, sample(Some(9)));
        assert!(matches!(
            parse_dio(&bytes, ParseOptions::STRICT),
            Err(DioError::UnknownOption {
                option_type: 0x99,
                ..
            })
        ));
    }

    #[test]
    fn strict_rpl_node_rejects_foreign_queue_option() {
        let bytes = serialize_dio(&sample(Some(1)));
        let opts = ParseOptions {
            queue_option_aware: false,
            accept_unknown_options: false,
        };
        assert!(matches!(
            parse_dio(&bytes, opts),
            Err(DioError::UnknownOption {
                option_type: QUEUE_OPTION_TYPE,
                ..
            })
        ));
    }

    #[test]
    fn malformed_queue_option() {
        let mut bytes = serialize_dio(&sample(None));
        bytes.extend_from_slice(&[0xCE, 0x02, 0x00, 0x01]);
        assert_eq!(
            parse_dio(&bytes, ParseOptions::BRPL),
            Err(DioError::BadQueueOptionLength { length: 2 })
        );
        let mut bytes = serialize_dio(&sample(Some(1)));
        bytes.extend_from_slice(&[0xCE, 0x04, 0, 0, 0, 2]);
        assert_eq!(
            parse_dio(&bytes, ParseOptions::BRPL),
            Err(DioError::DuplicateQueueOption)
        );
    }

    #[test]
    fn dodag_id_names_root() {
        assert_eq!(root_from_dodag_id(&dodag_id_for(NodeId(77))), Some(NodeId(77)));
        let mut foreign = [0u8; 16];
        foreign[0] = 0x20;
        assert_eq!(root_from_dodag_id(&foreign), None);
    }

    fn arb_dio() -> impl Strategy<Value = DioMessage> {
        (
            any::<(u8, u8, u16, u8, u8, u8, u8)>(),
            any::<[u8; 16]>(),
            proptest::option::of(any::<u32>()),
        )
            .prop_map(|((inst, ver, rank, fb, dtsn, flags, res), dodag_id, q)| DioMessage {
                rpl_instance_id: inst,
                version: ver,
                rank,
                flags_byte: fb,
                dtsn,
                flags,
                reserved: res,
                dodag_id,
                queue_option: q.map(QueueOption::new),
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(m in arb_dio()) {
            let bytes = serialize_dio(&m);
            prop_assert_eq!(bytes.len(), m.encoded_len());
            prop_assert_eq!(parse_dio(&bytes, ParseOptions::BRPL).unwrap(), m);
            prop_assert_eq!(parse_dio(&bytes, ParseOptions::STRICT).unwrap(), m);
            prop_assert_eq!(parse_dio(&bytes, ParseOptions::RPL).unwrap(), m.without_queue_option());
        }

        #[test]
        fn parse_then_serialize_is_identity(m in arb_dio()) {
            let bytes = serialize_dio(&m);
            let again = serialize_dio(&parse_dio(&bytes, ParseOptions::BRPL).unwrap());
            prop_assert_eq!(again, bytes);
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            let _ = parse_dio(&bytes, ParseOptions::BRPL);
            let _ = parse_dio(&bytes, ParseOptions::RPL);
        }
    }
}
