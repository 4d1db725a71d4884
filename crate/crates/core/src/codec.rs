//! Hex codecs for bit sequences and system states.
//!
//! Bit `m` of a sequence is bit `m mod 8` of byte `m / 8`, least significant
//! bit first; bytes are written as two lowercase hex digits, byte 0 first.
//! [`BitOrder::Msb`] flips the order inside each byte for comparison with
//! sources that number bits from the most significant end.

use crate::error::CodecError;
use crate::fsr::{SystemSpec, SystemState};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BitOrder {
    #[default]
    Lsb,
    Msb,
}

fn bit_pos(m: usize, order: BitOrder) -> u32 {
    match order {
        BitOrder::Lsb => (m % 8) as u32,
        BitOrder::Msb => 7 - (m % 8) as u32,
    }
}

pub fn bits_to_bytes(bits: &[bool], order: BitOrder) -> Vec<u8> {
    let mut bytes = vec![0u8; bits.len().div_ceil(8)];
    for (m, &b) in bits.iter().enumerate() {
        if b {
            bytes[m / 8] |= 1 << bit_pos(m, order);
        }
    }
    bytes
}

pub fn bytes_to_bits(bytes: &[u8], order: BitOrder) -> Vec<bool> {
    (0..bytes.len() * 8)
        .map(|m| bytes[m / 8] >> bit_pos(m, order) & 1 == 1)
        .collect()
}

pub fn encode_hex(bytes: &[u8]) -> String {
    const DIGITS: &[u8; 16] = b"0123456789abcdef";
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push(DIGITS[(b >> 4) as usize] as char);
        s.push(DIGITS[(b & 15) as usize] as char);
    }
    s
}

pub fn decode_hex(text: &str) -> Result<Vec<u8>, CodecError> {
    let text = text.trim();
    if text.len() % 2 != 0 {
        return Err(CodecError::OddLength(text.len()));
    }
    let digit = |i: usize, c: u8| -> Result<u8, CodecError> {
        (c as char)
            .to_digit(16)
            .map(|d| d as u8)
            .ok_or(CodecError::BadDigit(c as char, i))
    };
    text.as_bytes()
        .chunks(2)
        .enumerate()
        .map(|(i, pair)| Ok(digit(2 * i, pair[0])? << 4 | digit(2 * i + 1, pair[1])?))
        .collect()
}

/// Bits to hex; a trailing partial byte is zero-padded in its unused bits.
pub fn pack_bits(bits: &[bool], order: BitOrder) -> String {
    encode_hex(&bits_to_bytes(bits, order))
}

/// Hex to bits; every digit contributes, so the result length is a
/// multiple of 8.
pub fn unpack_bits(text: &str, order: BitOrder) -> Result<Vec<bool>, CodecError> {
    Ok(bytes_to_bits(&decode_hex(text)?, order))
}

/// Hex to exactly `nbits` bits; extra input bytes or non-zero padding are
/// errors.
pub fn unpack_exact(text: &str, nbits: usize, order: BitOrder) -> Result<Vec<bool>, CodecError> {
    let bytes = decode_hex(text)?;
    let expected = nbits.div_ceil(8);
    if bytes.len() != expected {
        return Err(CodecError::WrongLength {
            expected,
            got: bytes.len(),
        });
    }
    let mut bits = bytes_to_bits(&bytes, order);
    if bits[nbits..].iter().any(|&b| b) {
        return Err(CodecError::NonZeroPadding("value".into()));
    }
    bits.truncate(nbits);
    Ok(bits)
}

/// Registers in declaration order, each packed to whole bytes, then
/// `:<cycle>` when the cycle counter is not zero.
pub fn encode_state(spec: &SystemSpec, state: &SystemState) -> String {
    spec.check_state(state).expect("state does not conform to system");
    let mut s: String = state
        .registers()
        .iter()
        .map(|r| pack_bits(r, BitOrder::Lsb))
        .collect();
    if state.cycle() != 0 {
        s.push(':');
        s.push_str(&state.cycle().to_string());
    }
    s
}

pub fn decode_state(spec: &SystemSpec, text: &str) -> Result<SystemState, CodecError> {
    let text = text.trim();
    let (hex, cycle) = match text.split_once(':') {
        Some((h, c)) => (
            h,
            c.trim()
                .parse::<u64>()
                .map_err(|_| CodecError::BadCycle(c.to_owned()))?,
        ),
        None => (text, 0),
    };
    let bytes = decode_hex(hex)?;
    let expected: usize = spec.registers().iter().map(|r| r.len().div_ceil(8)).sum();
    if bytes.len() != expected {
        return Err(CodecError::WrongLength {
            expected,
            got: bytes.len(),
        });
    }
    let mut regs = Vec::with_capacity(spec.registers().len());
    let mut off = 0;
    for r in spec.registers() {
        let nb = r.len().div_ceil(8);
        let mut bits = bytes_to_bits(&bytes[off..off + nb], BitOrder::Lsb);
        if bits[r.len()..].iter().any(|&b| b) {
            return Err(CodecError::NonZeroPadding(r.id().to_string()));
        }
        bits.truncate(r.len());
        regs.push(bits);
        off += nb;
    }
    Ok(SystemState::from_registers(spec, regs)
        .expect("lengths match by construction")
        .with_cycle(cycle))
}
