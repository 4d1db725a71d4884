//! Grain-80 and Grain-128 in Fibonacci and Galois configurations.
//!
//! Each variant is a [`SystemSpec`] with NLFSR `b`, LFSR `s`, outputs `H`
//! and `Z`, and injections of `Z` into the top bit of both registers in
//! mode `init`. The LFSR is the same in every variant; only the NLFSR
//! feedback is redistributed.

use std::collections::BTreeMap;

use crate::anf::AnfExpr;
use crate::codec::{unpack_exact, BitOrder};
use crate::error::{GrainError, TransformError};
use crate::fsr::{Injection, RegisterSpec, SystemSpec, SystemState};
use crate::galois::map_initial_state;
use crate::text::parse_expr;

pub const INIT_MODE: &str = "init";

/// Which reading of the printed output functions to build.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum Transcription {
    /// Taps of the original cipher specifications, with the duplicated
    /// `b3*b67` of the Grain-128 1-bit list removed from `g127`.
    #[default]
    Official,
    /// The printed functions verbatim.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Run the initialization on the variant's own system.
    Native,
    /// Initialize the Fibonacci sibling, then map into this configuration.
    Equivalence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrainVariant {
    pub name: &'static str,
    pub system: SystemSpec,
    pub key_bits: usize,
    pub iv_bits: usize,
    pub init_cycles: usize,
    pub parallel_degree: usize,
    /// Terminal bit the variant was designed for, `None` for Fibonacci.
    pub design_terminal: Option<usize>,
    pub transcription: Transcription,
    /// Name of the Fibonacci variant with the same cipher.
    pub sibling: &'static str,
}

impl GrainVariant {
    pub fn is_fibonacci(&self) -> bool {
        self.name == self.sibling
    }

    pub fn nlfsr(&self) -> &RegisterSpec {
        &self.system.registers()[0]
    }

    pub fn lfsr(&self) -> &RegisterSpec {
        &self.system.registers()[1]
    }
}

struct Cipher {
    n: usize,
    iv_bits: usize,
    lfsr: &'static str,
    h_official: &'static str,
    h_printed: &'static str,
    z_linear: &'static str,
    fib: &'static str,
}

const GRAIN80: Cipher = Cipher {
    n: 80,
    iv_bits: 64,
    lfsr: "s[62] + s[51] + s[38] + s[23] + s[13] + s[0]",
    h_official: "s[25] + b[63] + s[3]*s[64] + s[46]*s[64] + s[64]*b[63] + s[3]*s[25]*s[46] \
        + s[3]*s[46]*s[64] + s[3]*s[46]*b[63] + s[25]*s[46]*b[63] + s[46]*s[64]*b[63]",
    h_printed: "s[25] + b[63] + s[3]*s[4] + s[46]*s[4] + s[4]*b[63] + s[3]*s[25]*s[46] \
        + s[3]*s[46]*s[4] + s[3]*s[46]*b[63] + s[25]*s[46]*b[63] + s[46]*s[4]*b[63]",
    z_linear: "b[1] + b[2] + b[4] + b[10] + b[31] + b[43] + b[56]",
    fib: "s[0] + b[0] + b[62] + b[60] + b[52] + b[45] + b[37] + b[33] + b[28] + b[21] \
        + b[14] + b[9] + b[63]*b[60] + b[37]*b[33] + b[15]*b[9] + b[60]*b[52]*b[45] \
        + b[33]*b[28]*b[21] + b[63]*b[45]*b[28]*b[9] + b[60]*b[52]*b[37]*b[33] \
        + b[63]*b[60]*b[21]*b[15] + b[63]*b[60]*b[52]*b[45]*b[37] \
        + b[33]*b[28]*b[21]*b[15]*b[9] + b[52]*b[45]*b[37]*b[33]*b[28]*b[21]",
};

const GRAIN128: Cipher = Cipher {
    n: 128,
    iv_bits: 96,
    lfsr: "s[0] + s[7] + s[38] + s[70] + s[81] + s[96]",
    h_official: "b[12]*s[8] + s[13]*s[20] + b[95]*s[42] + s[60]*s[79] + b[12]*b[95]*s[95]",
    h_printed: "b[12]*s[8] + s[13]*s[20] + b[95]*s[42] + s[60]*s[79] + b[12]*b[95]*s[95]",
    z_linear: "b[2] + b[15] + b[36] + b[45] + b[64] + b[73] + b[89] + s[93]",
    fib: "s[0] + b[0] + b[26] + b[56] + b[91] + b[96] + b[3]*b[67] + b[11]*b[13] \
        + b[17]*b[18] + b[27]*b[59] + b[40]*b[48] + b[61]*b[65] + b[68]*b[84]",
};

type Layout = &'static [(usize, &'static str)];

const G80_GALOIS_1: Layout = &[
    (79, "s[0] + b[0] + b[37]"),
    (78, "b[79] + b[44]"),
    (77, "b[78] + b[50]"),
    (76, "b[77] + b[57]"),
    (75, "b[76] + b[58]"),
    (74, "b[75] + b[32]*b[28]"),
    (73, "b[74] + b[3]"),
    (72, "b[73] + b[8]*b[2]"),
    (71, "b[72] + b[55]*b[37]*b[20]*b[1]"),
    (70, "b[71] + b[24]*b[19]*b[12]*b[6]*b[0]"),
    (69, "b[70] + b[53]*b[50]"),
    (68, "b[69] + b[49]*b[41]*b[26]*b[22]"),
    (67, "b[68] + b[9] + b[21]*b[16]*b[9]"),
    (66, "b[67] + b[15] + b[47]*b[39]*b[32]"),
    (65, "b[66] + b[0] + b[38]*b[31]*b[23]*b[19]*b[14]*b[7]"),
    (64, "b[65] + b[18] + b[48]*b[45]*b[6]*b[0]"),
    (63, "b[64] + b[47]*b[44]*b[36]*b[29]*b[21]"),
];

const G80_GALOIS_4: Layout = &[
    (79, "s[0] + b[0] + b[62] + b[33] + b[28] + b[21] + b[15]*b[9] \
        + b[52]*b[45]*b[37]*b[33]*b[28]*b[21]"),
    (75, "b[76] + b[41] + b[33] + b[5] + b[59]*b[56] + b[33]*b[29] + b[59]*b[41]*b[24]*b[5]"),
    (71, "b[72] + b[44] + b[25]*b[20]*b[13] + b[55]*b[52]*b[13]*b[7] \
        + b[25]*b[20]*b[13]*b[7]*b[1]"),
    (67, "b[68] + b[48] + b[2] + b[48]*b[40]*b[33] + b[48]*b[40]*b[25]*b[21] \
        + b[51]*b[48]*b[40]*b[33]*b[25]"),
];

const G80_GALOIS_8: Layout = &[
    (79, "s[0] + b[0] + b[14] + b[9] + b[15]*b[9] + b[60]*b[52]*b[45] + b[33]*b[28]*b[21] \
        + b[60] + b[60]*b[52]*b[37]*b[33] + b[63]*b[60]*b[21]*b[15] \
        + b[33]*b[28]*b[21]*b[15]*b[9]"),
    (71, "b[72] + b[44] + b[37] + b[29] + b[25] + b[20] + b[13] + b[55]*b[52] + b[54] \
        + b[29]*b[25] + b[55]*b[37]*b[20]*b[1] + b[55]*b[52]*b[44]*b[37]*b[29] \
        + b[44]*b[37]*b[29]*b[25]*b[20]*b[13]"),
];

const G128_GALOIS_1: Layout = &[
    (127, "s[0] + b[0] + b[3]*b[67]"),
    (124, "b[125] + b[0]*b[64]"),
    (116, "b[117] + b[0]*b[2]"),
    (110, "b[111] + b[0]*b[1]"),
    (102, "b[103] + b[71]"),
    (101, "b[102] + b[0]"),
    (100, "b[101] + b[0]*b[32]"),
    (99, "b[100] + b[63]"),
    (98, "b[99] + b[27]"),
    (97, "b[98] + b[38]*b[54]"),
    (96, "b[97] + b[30]*b[34]"),
    (95, "b[96] + b[8]*b[16]"),
];

const G128_GALOIS_4: Layout = &[
    (127, "s[0] + b[0] + b[3]*b[67]"),
    (123, "b[124] + b[64]*b[80]"),
    (119, "b[120] + b[3]*b[5]"),
    (115, "b[116] + b[49]*b[53]"),
    (111, "b[112] + b[1]*b[2]"),
    (107, "b[108] + b[6] + b[76]"),
    (103, "b[104] + b[67] + b[3]*b[35]"),
    (99, "b[100] + b[28] + b[12]*b[20]"),
];

const G128_GALOIS_8: Layout = &[
    (127, "s[0] + b[0] + b[56] + b[3]*b[67]"),
    (119, "b[120] + b[18] + b[88] + b[3]*b[5]"),
    (111, "b[112] + b[75] + b[1]*b[2] + b[52]*b[68]"),
    (103, "b[104] + b[3]*b[35] + b[16]*b[24] + b[37]*b[41]"),
];

const G128_GALOIS_16: Layout = &[
    (127, "s[0] + b[0] + b[56] + b[3]*b[67] + b[11]*b[13] + b[40]*b[48]"),
    (111, "b[112] + b[10] + b[75] + b[80] + b[1]*b[2] + b[11]*b[43] + b[45]*b[49] + b[52]*b[68]"),
];

struct Entry {
    name: &'static str,
    cipher: &'static Cipher,
    layout: Option<Layout>,
    k: usize,
    terminal: Option<usize>,
    sibling: &'static str,
}

const REGISTRY: &[Entry] = &[
    Entry { name: "grain80-fib", cipher: &GRAIN80, layout: None, k: 1, terminal: None, sibling: "grain80-fib" },
    Entry { name: "grain80-galois-1", cipher: &GRAIN80, layout: Some(G80_GALOIS_1), k: 1, terminal: Some(63), sibling: "grain80-fib" },
    Entry { name: "grain80-galois-4", cipher: &GRAIN80, layout: Some(G80_GALOIS_4), k: 4, terminal: Some(63), sibling: "grain80-fib" },
    Entry { name: "grain80-galois-8", cipher: &GRAIN80, layout: Some(G80_GALOIS_8), k: 8, terminal: Some(63), sibling: "grain80-fib" },
    Entry { name: "grain128-fib", cipher: &GRAIN128, layout: None, k: 1, terminal: None, sibling: "grain128-fib" },
    Entry { name: "grain128-galois-1", cipher: &GRAIN128, layout: Some(G128_GALOIS_1), k: 1, terminal: Some(95), sibling: "grain128-fib" },
    Entry { name: "grain128-galois-4", cipher: &GRAIN128, layout: Some(G128_GALOIS_4), k: 4, terminal: Some(95), sibling: "grain128-fib" },
    Entry { name: "grain128-galois-8", cipher: &GRAIN128, layout: Some(G128_GALOIS_8), k: 8, terminal: Some(95), sibling: "grain128-fib" },
    Entry { name: "grain128-galois-16", cipher: &GRAIN128, layout: Some(G128_GALOIS_16), k: 16, terminal: Some(95), sibling: "grain128-fib" },
];

pub fn variant_names() -> impl Iterator<Item = &'static str> {
    REGISTRY.iter().map(|e| e.name)
}

fn expr(text: &str) -> AnfExpr {
    parse_expr(text).unwrap_or_else(|e| panic!("built-in expression {text:?}: {e}"))
}

pub fn variant(name: &str, transcription: Transcription) -> Result<GrainVariant, GrainError> {
    let entry = REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| GrainError::UnknownVariant(name.to_owned()))?;
    let c = entry.cipher;
    let top = c.n - 1;

    let mut b = RegisterSpec::new("b", c.n);
    match entry.layout {
        None => b.set_feedback(top, expr(c.fib)),
        Some(layout) => layout.iter().try_for_each(|&(bit, text)| {
            let mut f = expr(text);
            if entry.name == "grain128-galois-1" && bit == top && transcription == Transcription::Official {
                f.toggle(crate::anf::ProductTerm::of("b", &[3, 67]));
            }
            b.set_feedback(bit, f)
        }),
    }
    .expect("built-in indices are in range");
    let s = RegisterSpec::new("s", c.n)
        .with_feedback(top, expr(c.lfsr))
        .expect("built-in indices are in range");

    let h = match transcription {
        Transcription::Official => c.h_official,
        Transcription::AsPrinted => c.h_printed,
    };
    let z = expr(&format!("{} + H", c.z_linear));
    let injections = ["b", "s"]
        .into_iter()
        .map(|r| Injection {
            mode: INIT_MODE.into(),
            register: r.into(),
            bit: top,
            output: "Z".into(),
        })
        .collect();
    let params = BTreeMap::from([
        ("key_bits".to_string(), c.n as i64),
        ("iv_bits".to_string(), c.iv_bits as i64),
        ("init_cycles".to_string(), 2 * c.n as i64),
    ]);
    let system = SystemSpec::new(
        entry.name,
        vec![b, s],
        vec![("H".into(), expr(h)), ("Z".into(), z)],
        injections,
        params,
    )
    .expect("built-in systems are well formed");

    Ok(GrainVariant {
        name: entry.name,
        system,
        key_bits: c.n,
        iv_bits: c.iv_bits,
        init_cycles: 2 * c.n,
        parallel_degree: entry.k,
        design_terminal: entry.terminal,
        transcription,
        sibling: entry.sibling,
    })
}

pub fn fibonacci_sibling(v: &GrainVariant) -> GrainVariant {
    variant(v.sibling, v.transcription).expect("siblings are registered")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyIv {
    pub key: Vec<bool>,
    pub iv: Vec<bool>,
}

impl KeyIv {
    /// Parse hex key and IV of the variant's exact byte lengths.
    pub fn from_hex(v: &GrainVariant, key: &str, iv: &str, order: BitOrder) -> Result<Self, GrainError> {
        Ok(KeyIv {
            key: unpack_exact(key, v.key_bits, order)?,
            iv: unpack_exact(iv, v.iv_bits, order)?,
        })
    }

    pub fn zero(v: &GrainVariant) -> Self {
        KeyIv {
            key: vec![false; v.key_bits],
            iv: vec![false; v.iv_bits],
        }
    }
}

/// NLFSR bit `i` takes key bit `i`; LFSR bit `i` takes IV bit `i` and the
/// remaining LFSR bits are set to one.
pub fn load(v: &GrainVariant, keyiv: &KeyIv) -> Result<SystemState, GrainError> {
    if keyiv.key.len() != v.key_bits {
        return Err(GrainError::Length {
            what: "key",
            expected: v.key_bits,
            got: keyiv.key.len(),
        });
    }
    if keyiv.iv.len() != v.iv_bits {
        return Err(GrainError::Length {
            what: "iv",
            expected: v.iv_bits,
            got: keyiv.iv.len(),
        });
    }
    let mut s = keyiv.iv.clone();
    s.resize(v.lfsr().len(), true);
    Ok(SystemState::from_registers(&v.system, vec![keyiv.key.clone(), s])
        .expect("register lengths follow the variant"))
}

pub fn initialize(
    v: &GrainVariant,
    state: &SystemState,
    mode: InitMode,
) -> Result<SystemState, GrainError> {
    match mode {
        InitMode::Native => Ok(run_init(&v.system, state, v.init_cycles)),
        InitMode::Equivalence => {
            let fib = fibonacci_sibling(v);
            let done = run_init(&fib.system, state, v.init_cycles);
            if v.is_fibonacci() {
                return Ok(done);
            }
            let regs = fib
                .system
                .registers()
                .iter()
                .zip(v.system.registers())
                .zip(done.registers())
                .map(|((f, g), bits)| {
                    if f == g {
                        Ok(bits.clone())
                    } else {
                        map_initial_state(f, g, bits)
                    }
                })
                .collect::<Result<Vec<_>, TransformError>>()?;
            Ok(SystemState::from_registers(&v.system, regs)
                .expect("sibling registers have equal lengths")
                .with_cycle(done.cycle()))
        }
    }
}

fn run_init(system: &SystemSpec, state: &SystemState, cycles: usize) -> SystemState {
    let mut cur = state.clone();
    for _ in 0..cycles {
        cur = system.step(&cur, &[INIT_MODE]);
    }
    cur
}

/// `nbits` keystream bits: each cycle emits `Z` on the current state, then
/// steps with the initialization loops open.
pub fn generate_keystream(
    v: &GrainVariant,
    state: &SystemState,
    nbits: usize,
) -> (Vec<bool>, SystemState) {
    let z = v.system.output_slot("Z").expect("grain systems define Z");
    let mut cur = state.clone();
    let mut out = Vec::with_capacity(nbits);
    for _ in 0..nbits {
        out.push(v.system.evaluate_outputs(&cur)[z]);
        cur = v.system.step(&cur, &[]);
    }
    (out, cur)
}

/// Load, initialize and generate in one call.
pub fn keystream(
    v: &GrainVariant,
    keyiv: &KeyIv,
    mode: InitMode,
    nbits: usize,
) -> Result<Vec<bool>, GrainError> {
    let st = initialize(v, &load(v, keyiv)?, mode)?;
    Ok(generate_keystream(v, &st, nbits).0)
}
