//! NMEA 0183 sentence handling and AIS payload decoding.
//!
//! The wire format wraps binary AIS payloads in `!AIVDM`/`!AIVDO` sentences.
//! Payload bytes are "armored": each character carries six bits. Long
//! messages (type 5) span several sentences that have to be reassembled
//! before decoding. This module parses the framing, assembles multipart
//! payloads, and decodes the dynamic position reports (types 1/2/3/18) and
//! static voyage reports (types 5/24) the extraction pipeline consumes.
//!
//! Field placeholders defined by the transport ("not available" markers such
//! as a reported speed of 102.3 kn or latitude 91°) are preserved as explicit
//! `None` values instead of being dropped here; the exclusion stage decides
//! what to do with them, which keeps decoding a pure view of the wire format.

use std::collections::VecDeque;

use thiserror::Error;

/// Raw sentinel for "speed not available" (in 0.1 kn units).
const SOG_NOT_AVAILABLE: u32 = 1023;
/// Raw sentinel for "course not available" (in 0.1° units).
const COG_NOT_AVAILABLE: u32 = 3600;
/// Raw sentinel for "longitude not available" (181° in 1/10000 min units).
const LON_NOT_AVAILABLE: i32 = 181 * 600_000;
/// Raw sentinel for "latitude not available" (91° in 1/10000 min units).
const LAT_NOT_AVAILABLE: i32 = 91 * 600_000;

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("checksum mismatch: sentence carries {found:#04x}, computed {computed:#04x}")]
    ChecksumMismatch { found: u8, computed: u8 },
    #[error("malformed sentence framing: {0}")]
    MalformedFraming(&'static str),
    #[error("unknown talker {0:?}")]
    UnknownTalker(String),
    #[error("payload byte {0:#04x} outside the six-bit alphabet")]
    InvalidPayloadChar(u8),
    #[error("missing fragment {index} of {count}")]
    MissingFragment { index: u8, count: u8 },
    #[error("duplicate fragment {index}")]
    DuplicateFragment { index: u8 },
    #[error("payload truncated: needed {needed} bits, got {got}")]
    TruncatedPayload { needed: usize, got: usize },
    #[error("message type {0} not handled")]
    UnsupportedType(u8),
    #[error("field {field} out of range (raw {raw})")]
    OutOfRangeField { field: &'static str, raw: i64 },
}

/// Sentence talker, restricted to the two AIS carriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Talker {
    /// Report about another vessel.
    Aivdm,
    /// Report about own vessel.
    Aivdo,
}

impl Talker {
    pub fn as_str(&self) -> &'static str {
        match self {
            Talker::Aivdm => "AIVDM",
            Talker::Aivdo => "AIVDO",
        }
    }
}

/// One parsed NMEA sentence, checksum verified.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSentence {
    pub talker: Talker,
    pub fragment_count: u8,
    pub fragment_index: u8,
    pub sequence_id: Option<u8>,
    pub channel: Option<char>,
    pub payload: String,
    pub fill_bits: u8,
    pub checksum: u8,
}

impl RawSentence {
    /// Rebuilds the checksummed portion of the sentence (everything between
    /// `!` and `*`). XOR-ing its bytes reproduces `checksum` for any sentence
    /// accepted by [`parse_sentence`].
    pub fn reserialize(&self) -> String {
        let seq = self.sequence_id.map(|s| s.to_string()).unwrap_or_default();
        let chan = self.channel.map(String::from).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.talker.as_str(),
            self.fragment_count,
            self.fragment_index,
            seq,
            chan,
            self.payload,
            self.fill_bits
        )
    }
}

/// One decoded dynamic position report.
///
/// `recv_time` and `originator` are reception metadata stamped by the caller
/// (they travel next to the payload in the day files, not inside it).
#[derive(Debug, Clone, PartialEq)]
pub struct AisMessage {
    /// Reception time, UNIX seconds.
    pub recv_time: f64,
    pub mmsi: u32,
    pub msg_type: u8,
    /// Latitude in degrees, `None` when the transponder reported 91°.
    pub lat: Option<f64>,
    /// Longitude in degrees, `None` when the transponder reported 181°.
    pub lon: Option<f64>,
    /// Speed over ground in knots, `None` when the raw field was 1023.
    pub sog: Option<f64>,
    /// Course over ground in degrees [0, 360), `None` when the raw field was 3600.
    pub cog: Option<f64>,
    /// Country code of the receiving base station, when known.
    pub originator: Option<String>,
}

impl AisMessage {
    pub fn position(&self) -> Option<(f64, f64)> {
        match (self.lat, self.lon) {
            (Some(lat), Some(lon)) => Some((lat, lon)),
            _ => None,
        }
    }

    /// Stamps reception metadata onto a freshly decoded message.
    pub fn with_reception(mut self, recv_time: f64, originator: Option<String>) -> Self {
        self.recv_time = recv_time;
        self.originator = originator;
        self
    }

    /// Payload-field equality: same vessel reporting the same kinematic
    /// content, regardless of when or where the copy was received.
    pub fn content_eq(&self, other: &AisMessage) -> bool {
        self.mmsi == other.mmsi
            && self.msg_type == other.msg_type
            && self.lat == other.lat
            && self.lon == other.lon
            && self.sog == other.sog
            && self.cog == other.cog
    }
}

/// Static voyage data for one transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VesselStatic {
    pub mmsi: u32,
    /// Overall ship length in meters (bow + stern antenna distance).
    pub ship_length: Option<f64>,
    /// Ship type code per the ITU taxonomy.
    pub ship_type: Option<u8>,
}

/// Ship lengths at or above this are treated as transmission garbage.
const MAX_PLAUSIBLE_LENGTH_M: f64 = 500.0;

fn nmea_checksum(body: &str) -> u8 {
    body.bytes().fold(0, |acc, b| acc ^ b)
}

fn sixbit(b: u8) -> Result<u8, DecodeError> {
    match b {
        48..=87 => Ok(b - 48),
        96..=119 => Ok(b - 56),
        _ => Err(DecodeError::InvalidPayloadChar(b)),
    }
}

/// Parses one `!AIVDM`/`!AIVDO` line. Leading/trailing whitespace is
/// tolerated; anything else must follow NMEA 0183 framing exactly.
pub fn parse_sentence(line: &str) -> Result<RawSentence, DecodeError> {
    let line = line.trim();
    let rest = line
        .strip_prefix('!')
        .ok_or(DecodeError::MalformedFraming("missing '!' introducer"))?;
    let star = rest
        .rfind('*')
        .ok_or(DecodeError::MalformedFraming("missing '*' checksum separator"))?;
    let body = &rest[..star];
    let checksum_text = &rest[star + 1..];
    if checksum_text.len() != 2 {
        return Err(DecodeError::MalformedFraming("checksum must be two hex digits"));
    }
    let found = u8::from_str_radix(checksum_text, 16)
        .map_err(|_| DecodeError::MalformedFraming("checksum must be two hex digits"))?;
    let computed = nmea_checksum(body);
    if computed != found {
        return Err(DecodeError::ChecksumMismatch { found, computed });
    }

    let mut fields = body.split(',');
    let talker_text = fields.next().unwrap_or_default();
    let talker = match talker_text {
        "AIVDM" => Talker::Aivdm,
        "AIVDO" => Talker::Aivdo,
        other => return Err(DecodeError::UnknownTalker(other.to_string())),
    };
    let parts: Vec<&str> = fields.collect();
    if parts.len() != 6 {
        return Err(DecodeError::MalformedFraming("expected 7 comma-separated fields"));
    }
    let fragment_count: u8 = parts[0]
        .parse()
        .map_err(|_| DecodeError::MalformedFraming("fragment count not a number"))?;
    let fragment_index: u8 = parts[1]
        .parse()
        .map_err(|_| DecodeError::MalformedFraming("fragment index not a number"))?;
    if fragment_count == 0 || fragment_index == 0 || fragment_index > fragment_count {
        return Err(DecodeError::MalformedFraming("fragment index outside 1..=count"));
    }
    let sequence_id = if parts[2].is_empty() {
        None
    } else {
        Some(
            parts[2]
                .parse()
                .map_err(|_| DecodeError::MalformedFraming("sequence id not a number"))?,
        )
    };
    let channel = parts[3].chars().next();
    let payload = parts[4];
    for b in payload.bytes() {
        sixbit(b)?;
    }
    let fill_bits: u8 = parts[5]
        .parse()
        .map_err(|_| DecodeError::MalformedFraming("fill bits not a number"))?;
    if fill_bits > 5 {
        return Err(DecodeError::MalformedFraming("fill bits above 5"));
    }

    Ok(RawSentence {
        talker,
        fragment_count,
        fragment_index,
        sequence_id,
        channel,
        payload: payload.to_string(),
        fill_bits,
        checksum: found,
    })
}

/// A decoded bit payload. Bits are packed MSB-first.
#[derive(Debug, Clone, PartialEq)]
pub struct BitPayload {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitPayload {
    /// Wraps pre-packed bytes (MSB-first) as a payload of `bit_len` bits.
    pub fn from_bytes(bytes: Vec<u8>, bit_len: usize) -> Self {
        assert!(bytes.len() * 8 >= bit_len, "byte buffer shorter than bit length");
        Self { bytes, bit_len }
    }

    pub fn len(&self) -> usize {
        self.bit_len
    }

    pub fn is_empty(&self) -> bool {
        self.bit_len == 0
    }

    /// Unsigned field of up to 32 bits starting at `start`.
    pub fn u32_at(&self, start: usize, width: usize) -> u32 {
        debug_assert!(width <= 32 && start + width <= self.bit_len);
        let mut v = 0u32;
        for i in start..start + width {
            let bit = (self.bytes[i / 8] >> (7 - i % 8)) & 1;
            v = (v << 1) | u32::from(bit);
        }
        v
    }

    /// Two's-complement signed field of up to 32 bits.
    pub fn i32_at(&self, start: usize, width: usize) -> i32 {
        let v = self.u32_at(start, width);
        if width < 32 && v >> (width - 1) == 1 {
            (v as i32).wrapping_sub(1 << width)
        } else {
            v as i32
        }
    }
}

/// Concatenates a fragment set into one bitstream. Fragments may arrive in
/// any order; they must share a sequence id and cover `1..=fragment_count`
/// exactly once. Fill bits of the final fragment are stripped.
pub fn assemble(fragments: &[RawSentence]) -> Result<BitPayload, DecodeError> {
    let count = fragments
        .first()
        .ok_or(DecodeError::MalformedFraming("empty fragment set"))?
        .fragment_count;
    let seq = fragments[0].sequence_id;
    let mut ordered: Vec<Option<&RawSentence>> = vec![None; count as usize];
    for frag in fragments {
        if frag.fragment_count != count || frag.sequence_id != seq {
            return Err(DecodeError::MalformedFraming("mixed fragment sets"));
        }
        let slot = &mut ordered[frag.fragment_index as usize - 1];
        if slot.is_some() {
            return Err(DecodeError::DuplicateFragment { index: frag.fragment_index });
        }
        *slot = Some(frag);
    }
    for (i, slot) in ordered.iter().enumerate() {
        if slot.is_none() {
            return Err(DecodeError::MissingFragment { index: i as u8 + 1, count });
        }
    }

    let total_chars: usize = ordered.iter().map(|f| f.unwrap().payload.len()).sum();
    let mut bytes = vec![0u8; (total_chars * 6).div_ceil(8)];
    let mut offset = 0usize;
    for frag in ordered.iter().map(|f| f.unwrap()) {
        for b in frag.payload.bytes() {
            let v = sixbit(b)?;
            // Place six bits starting at `offset`, MSB-first.
            let aligned = u16::from(v) << (10 - offset % 8);
            bytes[offset / 8] |= (aligned >> 8) as u8;
            if offset % 8 > 2 {
                bytes[offset / 8 + 1] |= (aligned & 0xff) as u8;
            }
            offset += 6;
        }
    }
    let fill = ordered.last().unwrap().unwrap().fill_bits as usize;
    if fill > offset {
        return Err(DecodeError::MalformedFraming("fill bits exceed payload"));
    }
    Ok(BitPayload { bytes, bit_len: offset - fill })
}

/// Field offsets for the two dynamic report layouts.
struct DynamicLayout {
    sog: usize,
    lon: usize,
    lat: usize,
    cog: usize,
}

const LAYOUT_CLASS_A: DynamicLayout = DynamicLayout { sog: 50, lon: 61, lat: 89, cog: 116 };
const LAYOUT_CLASS_B: DynamicLayout = DynamicLayout { sog: 46, lon: 57, lat: 85, cog: 112 };

/// Decodes a dynamic position report (types 1/2/3/18).
///
/// Total on every payload of sufficient length: the result is either a
/// message or a typed error, never a panic. Reception metadata is left at
/// its defaults; see [`AisMessage::with_reception`].
pub fn decode_dynamic(payload: &BitPayload) -> Result<AisMessage, DecodeError> {
    if payload.len() < 40 {
        return Err(DecodeError::TruncatedPayload { needed: 40, got: payload.len() });
    }
    let msg_type = payload.u32_at(0, 6) as u8;
    let layout = match msg_type {
        1..=3 => LAYOUT_CLASS_A,
        18 => LAYOUT_CLASS_B,
        other => return Err(DecodeError::UnsupportedType(other)),
    };
    if payload.len() < 168 {
        return Err(DecodeError::TruncatedPayload { needed: 168, got: payload.len() });
    }
    let mmsi = payload.u32_at(8, 30);
    if mmsi > 999_999_999 {
        return Err(DecodeError::OutOfRangeField { field: "mmsi", raw: i64::from(mmsi) });
    }

    let sog_raw = payload.u32_at(layout.sog, 10);
    let sog = (sog_raw != SOG_NOT_AVAILABLE).then(|| f64::from(sog_raw) / 10.0);

    let lon_raw = payload.i32_at(layout.lon, 28);
    let lon = if lon_raw == LON_NOT_AVAILABLE {
        None
    } else if lon_raw.unsigned_abs() > 180 * 600_000 {
        return Err(DecodeError::OutOfRangeField { field: "lon", raw: i64::from(lon_raw) });
    } else {
        Some(f64::from(lon_raw) / 600_000.0)
    };

    let lat_raw = payload.i32_at(layout.lat, 27);
    let lat = if lat_raw == LAT_NOT_AVAILABLE {
        None
    } else if lat_raw.unsigned_abs() > 90 * 600_000 {
        return Err(DecodeError::OutOfRangeField { field: "lat", raw: i64::from(lat_raw) });
    } else {
        Some(f64::from(lat_raw) / 600_000.0)
    };

    let cog_raw = payload.u32_at(layout.cog, 12);
    let cog = if cog_raw == COG_NOT_AVAILABLE {
        None
    } else if cog_raw > COG_NOT_AVAILABLE {
        return Err(DecodeError::OutOfRangeField { field: "cog", raw: i64::from(cog_raw) });
    } else {
        Some(f64::from(cog_raw) / 10.0)
    };

    Ok(AisMessage {
        recv_time: 0.0,
        mmsi,
        msg_type,
        lat,
        lon,
        sog,
        cog,
        originator: None,
    })
}

fn ship_length_from_dims(to_bow: u32, to_stern: u32) -> Option<f64> {
    if to_bow == 0 && to_stern == 0 {
        return None; // both-zero is the "not available" encoding
    }
    let length = f64::from(to_bow + to_stern);
    (length < MAX_PLAUSIBLE_LENGTH_M).then_some(length)
}

/// Decodes a static voyage report (type 5) or static data report (type 24).
pub fn decode_static(payload: &BitPayload) -> Result<VesselStatic, DecodeError> {
    if payload.len() < 40 {
        return Err(DecodeError::TruncatedPayload { needed: 40, got: payload.len() });
    }
    let msg_type = payload.u32_at(0, 6) as u8;
    let mmsi = payload.u32_at(8, 30);
    if mmsi > 999_999_999 {
        return Err(DecodeError::OutOfRangeField { field: "mmsi", raw: i64::from(mmsi) });
    }
    match msg_type {
        5 => {
            // Needs everything through the stern dimension at bit 258.
            if payload.len() < 258 {
                return Err(DecodeError::TruncatedPayload { needed: 258, got: payload.len() });
            }
            let ship_type_raw = payload.u32_at(232, 8) as u8;
            let to_bow = payload.u32_at(240, 9);
            let to_stern = payload.u32_at(249, 9);
            Ok(VesselStatic {
                mmsi,
                ship_length: ship_length_from_dims(to_bow, to_stern),
                ship_type: (ship_type_raw != 0).then_some(ship_type_raw),
            })
        }
        24 => {
            let part = payload.u32_at(38, 2);
            match part {
                // Part A only carries the name.
                0 => Ok(VesselStatic { mmsi, ship_length: None, ship_type: None }),
                1 => {
                    if payload.len() < 150 {
                        return Err(DecodeError::TruncatedPayload {
                            needed: 150,
                            got: payload.len(),
                        });
                    }
                    let ship_type_raw = payload.u32_at(40, 8) as u8;
                    let to_bow = payload.u32_at(132, 9);
                    let to_stern = payload.u32_at(141, 9);
                    Ok(VesselStatic {
                        mmsi,
                        ship_length: ship_length_from_dims(to_bow, to_stern),
                        ship_type: (ship_type_raw != 0).then_some(ship_type_raw),
                    })
                }
                other => {
                    Err(DecodeError::OutOfRangeField { field: "part_number", raw: i64::from(other) })
                }
            }
        }
        other => Err(DecodeError::UnsupportedType(other)),
    }
}

/// Buffers multipart fragments until their set completes.
///
/// Fragment sets are keyed by `(channel, sequence_id)` so interleaved
/// transmissions on different channels do not collide. The buffer holds at
/// most [`MultipartAssembler::CAPACITY`] open sets; the least recently
/// touched set is evicted first, which bounds memory on streams that never
/// complete their fragment sets.
#[derive(Debug, Default)]
pub struct MultipartAssembler {
    slots: VecDeque<Slot>,
}

#[derive(Debug)]
struct Slot {
    key: (Option<char>, Option<u8>),
    fragments: Vec<RawSentence>,
}

impl MultipartAssembler {
    pub const CAPACITY: usize = 64;

    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds one sentence. Returns the assembled payload when the sentence
    /// completes a message (single-fragment sentences complete immediately).
    pub fn push(&mut self, sentence: RawSentence) -> Result<Option<BitPayload>, DecodeError> {
        if sentence.fragment_count == 1 {
            return assemble(std::slice::from_ref(&sentence)).map(Some);
        }
        let key = (sentence.channel, sentence.sequence_id);
        let pos = self.slots.iter().position(|s| s.key == key);
        let mut slot = match pos {
            Some(i) => self.slots.remove(i).unwrap(),
            None => {
                if self.slots.len() == Self::CAPACITY {
                    self.slots.pop_front();
                }
                Slot { key, fragments: Vec::new() }
            }
        };
        if slot.fragments.iter().any(|f| f.fragment_index == sentence.fragment_index) {
            self.slots.push_back(slot);
            return Err(DecodeError::DuplicateFragment { index: sentence.fragment_index });
        }
        slot.fragments.push(sentence);
        if slot.fragments.len() == slot.fragments[0].fragment_count as usize {
            return assemble(&slot.fragments).map(Some);
        }
        self.slots.push_back(slot);
        Ok(None)
    }

    /// Number of fragment sets still waiting for completion.
    pub fn open_sets(&self) -> usize {
        self.slots.len()
    }
}
