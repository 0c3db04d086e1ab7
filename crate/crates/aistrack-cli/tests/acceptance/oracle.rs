//! Test-only reference tooling, kept independent of the library's decode
//! path: a bool-vector bit slicer driven by a field-offset table checked by
//! hand against the transport spec, plus an encoder used to build fixtures.

/// Plain bit vector, MSB-first, deliberately unlike the library's packed
/// byte representation.
#[derive(Debug, Clone)]
pub struct BitVec {
    pub bits: Vec<bool>,
}

impl BitVec {
    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![false; n] }
    }

    /// Expands an armored payload, six bits per character, dropping `fill`
    /// trailing bits.
    pub fn from_armored(payload: &str, fill: usize) -> Self {
        let mut bits = Vec::with_capacity(payload.len() * 6);
        for ch in payload.bytes() {
            let mut v = ch - 48;
            if v > 40 {
                v -= 8;
            }
            for shift in (0..6).rev() {
                bits.push((v >> shift) & 1 == 1);
            }
        }
        bits.truncate(bits.len() - fill);
        Self { bits }
    }

    pub fn uint(&self, start: usize, width: usize) -> u64 {
        let mut v = 0u64;
        for i in 0..width {
            v = (v << 1) | u64::from(self.bits[start + i]);
        }
        v
    }

    pub fn int(&self, start: usize, width: usize) -> i64 {
        let v = self.uint(start, width);
        if (v >> (width - 1)) & 1 == 1 {
            v as i64 - (1i64 << width)
        } else {
            v as i64
        }
    }

    pub fn set(&mut self, start: usize, width: usize, value: u64) {
        for i in 0..width {
            self.bits[start + i] = (value >> (width - 1 - i)) & 1 == 1;
        }
    }

    /// Armors the bits back into payload characters; returns the text and
    /// the number of fill bits appended.
    pub fn armor(&self) -> (String, u8) {
        let fill = (6 - self.bits.len() % 6) % 6;
        let mut padded = self.bits.clone();
        padded.resize(self.bits.len() + fill, false);
        let mut out = String::with_capacity(padded.len() / 6);
        for chunk in padded.chunks(6) {
            let mut v = 0u8;
            for &bit in chunk {
                v = (v << 1) | u8::from(bit);
            }
            if v > 39 {
                v += 8;
            }
            out.push((v + 48) as char);
        }
        (out, fill as u8)
    }
}

/// Raw dynamic-report fields per the transport layout. Class A position
/// reports (types 1/2/3) and Class B (type 18) differ only in offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawDynamic {
    pub msg_type: u8,
    pub mmsi: u32,
    pub sog_raw: u32,
    pub lon_raw: i32,
    pub lat_raw: i32,
    pub cog_raw: u32,
}

/// (sog, lon, lat, cog) bit offsets.
fn dynamic_offsets(msg_type: u8) -> (usize, usize, usize, usize) {
    match msg_type {
        1..=3 => (50, 61, 89, 116),
        18 => (46, 57, 85, 112),
        other => panic!("not a dynamic layout: {other}"),
    }
}

/// Table-driven slice of a dynamic payload.
pub fn slice_dynamic(bits: &BitVec) -> RawDynamic {
    let msg_type = bits.uint(0, 6) as u8;
    let (sog, lon, lat, cog) = dynamic_offsets(msg_type);
    RawDynamic {
        msg_type,
        mmsi: bits.uint(8, 30) as u32,
        sog_raw: bits.uint(sog, 10) as u32,
        lon_raw: bits.int(lon, 28) as i32,
        lat_raw: bits.int(lat, 27) as i32,
        cog_raw: bits.uint(cog, 12) as u32,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawStatic {
    pub mmsi: u32,
    pub ship_type: u8,
    pub to_bow: u32,
    pub to_stern: u32,
}

pub fn slice_static_type5(bits: &BitVec) -> RawStatic {
    assert_eq!(bits.uint(0, 6), 5);
    RawStatic {
        mmsi: bits.uint(8, 30) as u32,
        ship_type: bits.uint(232, 8) as u8,
        to_bow: bits.uint(240, 9) as u32,
        to_stern: bits.uint(249, 9) as u32,
    }
}

/// Builds a dynamic payload (168 bits) from raw field values.
pub fn encode_dynamic(raw: &RawDynamic) -> BitVec {
    let mut bits = BitVec::zeros(168);
    bits.set(0, 6, u64::from(raw.msg_type));
    bits.set(8, 30, u64::from(raw.mmsi));
    let (sog, lon, lat, cog) = dynamic_offsets(raw.msg_type);
    bits.set(sog, 10, u64::from(raw.sog_raw));
    bits.set(lon, 28, (raw.lon_raw as u64) & ((1 << 28) - 1));
    bits.set(lat, 27, (raw.lat_raw as u64) & ((1 << 27) - 1));
    bits.set(cog, 12, u64::from(raw.cog_raw));
    if matches!(raw.msg_type, 1..=3) {
        bits.set(42, 8, 0x80); // turn rate not available
        bits.set(128, 9, 511); // heading not available
        bits.set(137, 6, 60); // timestamp not available
    } else {
        bits.set(124, 9, 511);
        bits.set(133, 6, 60);
    }
    bits
}

/// Builds a type-5 static payload (424 bits) carrying type and dimensions.
pub fn encode_static_type5(raw: &RawStatic) -> BitVec {
    let mut bits = BitVec::zeros(424);
    bits.set(0, 6, 5);
    bits.set(8, 30, u64::from(raw.mmsi));
    bits.set(232, 8, u64::from(raw.ship_type));
    bits.set(240, 9, u64::from(raw.to_bow));
    bits.set(249, 9, u64::from(raw.to_stern));
    bits
}

/// Wraps an armored payload into a checksummed sentence.
pub fn sentence(payload: &str, count: u8, index: u8, seq: &str, channel: char, fill: u8) -> String {
    let body = format!("AIVDM,{count},{index},{seq},{channel},{payload},{fill}");
    let checksum = body.bytes().fold(0u8, |a, b| a ^ b);
    format!("!{body}*{checksum:02X}")
}

/// One single-fragment sentence for a dynamic report.
pub fn dynamic_sentence(raw: &RawDynamic) -> String {
    let (payload, fill) = encode_dynamic(raw).armor();
    sentence(&payload, 1, 1, "", 'A', fill)
}

/// The two-fragment sentence pair for a type-5 report.
pub fn static_sentence_pair(raw: &RawStatic, seq: u8) -> (String, String) {
    let (payload, fill) = encode_static_type5(raw).armor();
    let (head, tail) = payload.split_at(56);
    (
        sentence(head, 2, 1, &seq.to_string(), 'A', 0),
        sentence(tail, 2, 2, &seq.to_string(), 'A', fill),
    )
}

/// Raw encodings of physical values, matching the transport quantization.
pub fn sog_to_raw(kn: f64) -> u32 {
    (kn * 10.0).round() as u32
}

pub fn deg_to_raw(deg: f64) -> i32 {
    (deg * 600_000.0).round() as i32
}

pub fn cog_to_raw(deg: f64) -> u32 {
    (deg * 10.0).round() as u32 % 3600
}
