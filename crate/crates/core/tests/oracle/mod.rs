//! Straight-line Grain-80 and Grain-128 written directly from the cipher
//! equations on plain arrays, sharing no code with the library.

#![allow(dead_code)]

pub struct Grain80 {
    b: [u8; 80],
    s: [u8; 80],
}

impl Grain80 {
    pub fn new(key: &[u8; 80], iv: &[u8; 64]) -> Self {
        let mut s = [1u8; 80];
        s[..64].copy_from_slice(iv);
        let mut g = Grain80 { b: *key, s };
        for _ in 0..160 {
            let z = g.z();
            g.clock(z);
        }
        g
    }

    fn h(&self) -> u8 {
        let (s, b) = (&self.s, &self.b);
        let (x0, x1, x2, x3, x4) = (s[3], s[25], s[46], s[64], b[63]);
        x1 ^ x4
            ^ x0 & x3
            ^ x2 & x3
            ^ x3 & x4
            ^ x0 & x1 & x2
            ^ x0 & x2 & x3
            ^ x0 & x2 & x4
            ^ x1 & x2 & x4
            ^ x2 & x3 & x4
    }

    pub fn z(&self) -> u8 {
        let b = &self.b;
        b[1] ^ b[2] ^ b[4] ^ b[10] ^ b[31] ^ b[43] ^ b[56] ^ self.h()
    }

    fn clock(&mut self, feed: u8) {
        let (s, b) = (&self.s, &self.b);
        let ls = s[62] ^ s[51] ^ s[38] ^ s[23] ^ s[13] ^ s[0];
        let nb = s[0]
            ^ b[62] ^ b[60] ^ b[52] ^ b[45] ^ b[37] ^ b[33] ^ b[28] ^ b[21] ^ b[14] ^ b[9] ^ b[0]
            ^ b[63] & b[60]
            ^ b[37] & b[33]
            ^ b[15] & b[9]
            ^ b[60] & b[52] & b[45]
            ^ b[33] & b[28] & b[21]
            ^ b[63] & b[45] & b[28] & b[9]
            ^ b[60] & b[52] & b[37] & b[33]
            ^ b[63] & b[60] & b[21] & b[15]
            ^ b[63] & b[60] & b[52] & b[45] & b[37]
            ^ b[33] & b[28] & b[21] & b[15] & b[9]
            ^ b[52] & b[45] & b[37] & b[33] & b[28] & b[21];
        self.s.copy_within(1.., 0);
        self.b.copy_within(1.., 0);
        self.s[79] = ls ^ feed;
        self.b[79] = nb ^ feed;
    }

    pub fn keystream(&mut self, n: usize) -> Vec<bool> {
        (0..n)
            .map(|_| {
                let z = self.z();
                self.clock(0);
                z == 1
            })
            .collect()
    }
}

pub struct Grain128 {
    b: [u8; 128],
    s: [u8; 128],
}

impl Grain128 {
    pub fn new(key: &[u8; 128], iv: &[u8; 96]) -> Self {
        let mut s = [1u8; 128];
        s[..96].copy_from_slice(iv);
        let mut g = Grain128 { b: *key, s };
        for _ in 0..256 {
            let z = g.z();
            g.clock(z);
        }
        g
    }

    pub fn z(&self) -> u8 {
        let (s, b) = (&self.s, &self.b);
        let h = b[12] & s[8] ^ s[13] & s[20] ^ b[95] & s[42] ^ s[60] & s[79] ^ b[12] & b[95] & s[95];
        b[2] ^ b[15] ^ b[36] ^ b[45] ^ b[64] ^ b[73] ^ b[89] ^ s[93] ^ h
    }

    fn clock(&mut self, feed: u8) {
        let (s, b) = (&self.s, &self.b);
        let ls = s[0] ^ s[7] ^ s[38] ^ s[70] ^ s[81] ^ s[96];
        let nb = s[0] ^ b[0] ^ b[26] ^ b[56] ^ b[91] ^ b[96]
            ^ b[3] & b[67]
            ^ b[11] & b[13]
            ^ b[17] & b[18]
            ^ b[27] & b[59]
            ^ b[40] & b[48]
            ^ b[61] & b[65]
            ^ b[68] & b[84];
        self.s.copy_within(1.., 0);
        self.b.copy_within(1.., 0);
        self.s[127] = ls ^ feed;
        self.b[127] = nb ^ feed;
    }

    pub fn keystream(&mut self, n: usize) -> Vec<bool> {
        (0..n)
            .map(|_| {
                let z = self.z();
                self.clock(0);
                z == 1
            })
            .collect()
    }
}

/// Bytes to bits, bit `j` of byte `i` at position `8i + j`.
pub fn lsb_bits<const N: usize>(bytes: &[u8]) -> [u8; N] {
    let mut out = [0u8; N];
    for (m, o) in out.iter_mut().enumerate() {
        *o = bytes[m / 8] >> (m % 8) & 1;
    }
    out
}

pub fn lsb_hex(bits: &[bool]) -> String {
    bits.chunks(8)
        .map(|c| {
            let v = c.iter().enumerate().fold(0u8, |a, (j, &b)| a | (b as u8) << j);
            format!("{v:02x}")
        })
        .collect()
}

pub fn msb_hex(bits: &[bool]) -> String {
    bits.chunks(8)
        .map(|c| {
            let v = c.iter().fold(0u8, |a, &b| a << 1 | b as u8);
            format!("{v:02x}")
        })
        .collect()
}
