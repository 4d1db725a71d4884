use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use grain_galois::codec::{self, BitOrder};
use grain_galois::fsr::{RegisterSpec, SystemSpec, SystemState};
use grain_galois::galois::{self, Verdict};
use grain_galois::grain::{self, InitMode, KeyIv, Transcription};
use grain_galois::text;
use grain_galois::timing::{self, CostModel};

#[derive(Parser)]
#[command(name = "grain-galois", version, about = "Fibonacci and Galois NLFSR tools for Grain-80/128")]
struct Cli {
    /// Flat key=value output for scripts.
    #[arg(long, global = true)]
    json: bool,
    /// Bit order inside each hex byte for keys, IVs and keystream.
    #[arg(long, global = true, value_enum, default_value_t = Order::Lsb)]
    bit_order: Order,
    /// Build registry variants from the printed functions verbatim.
    #[arg(long, global = true)]
    as_printed: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Lsb,
    Msb,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    Native,
    Equivalence,
}

#[derive(Subcommand)]
enum Command {
    /// Load key and IV, initialize, and print keystream as hex.
    Keystream(KeystreamArgs),
    /// Redistribute a register's feedback by script or automatically.
    Transform(TransformArgs),
    #[command(subcommand)]
    Verify(Verify),
    #[command(subcommand)]
    Analyze(Analyze),
    /// Convert a Fibonacci state to the matching Galois state, or back.
    MapState(MapStateArgs),
    /// Print the registry of built-in variants.
    ListVariants,
}

#[derive(Subcommand)]
enum Verify {
    /// Check the uniformity conditions of a register.
    Uniform(UniformArgs),
    /// Collapse a Galois register and compare with its Fibonacci form.
    Collapse(CollapseArgs),
    /// Compare the output behaviour of two systems.
    Equivalence(EquivalenceArgs),
    /// Check feedback positions and k-way unrolling.
    Parallel(ParallelArgs),
}

#[derive(Subcommand)]
enum Analyze {
    /// Gate-depth report and clock divider choice.
    Timing(TimingArgs),
}

/// A registry variant name or a system document path.
#[derive(Args, Clone)]
struct Source {
    /// Registry variant (see list-variants).
    #[arg(long, conflicts_with = "spec")]
    variant: Option<String>,
    /// System document.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args)]
struct KeystreamArgs {
    #[arg(long)]
    variant: String,
    #[arg(long, required_unless_present = "state")]
    key: Option<String>,
    #[arg(long, required_unless_present = "state")]
    iv: Option<String>,
    /// Start from an encoded, already initialized state instead.
    #[arg(long, conflicts_with_all = ["key", "iv"])]
    state: Option<String>,
    #[arg(long, default_value_t = 128)]
    bits: usize,
    #[arg(long, value_enum, default_value_t = Init::Equivalence)]
    init: Init,
    /// Also print the state after generation.
    #[arg(long)]
    show_state: bool,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    register: Option<String>,
    /// Shift script to apply.
    #[arg(long, conflicts_with = "auto", required_unless_present = "auto")]
    script: Option<PathBuf>,
    /// Spread the top feedback over the allowed positions.
    #[arg(long, requires_all = ["k", "terminal"])]
    auto: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    terminal: Option<usize>,
    /// Cost model file for --auto.
    #[arg(long)]
    cost: Option<PathBuf>,
    /// Write the transformed system here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the script produced by --auto here.
    #[arg(long)]
    emit_script: Option<PathBuf>,
}

#[derive(Args)]
struct UniformArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    register: Option<String>,
    /// Check against this terminal bit instead of the register's own.
    #[arg(long)]
    terminal: Option<usize>,
}

#[derive(Args)]
struct CollapseArgs {
    #[command(flatten)]
    source: Source,
    /// Fibonacci reference; defaults to the variant's sibling.
    #[arg(long)]
    fib: Option<String>,
    #[arg(long)]
    register: Option<String>,
}

#[derive(Args)]
struct EquivalenceArgs {
    /// First system: registry name or document path.
    #[arg(long)]
    a: String,
    /// Second system: registry name or document path.
    #[arg(long)]
    b: String,
    #[arg(long)]
    register: Option<String>,
    /// Enumerate every state (registers up to 20 bits).
    #[arg(long, conflicts_with = "mapped")]
    exhaustive: bool,
    /// Prefix length for --exhaustive; default 2^n.
    #[arg(long, requires = "exhaustive")]
    horizon: Option<usize>,
    /// Random mapped states from the Fibonacci system `a`.
    #[arg(long, requires = "seed")]
    mapped: bool,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1000)]
    cycles: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Keep the initialization loops closed while comparing.
    #[arg(long)]
    init_loops: bool,
}

#[derive(Args)]
struct ParallelArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    register: Option<String>,
    /// Degree to check; defaults to the declared one.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    terminal: Option<usize>,
    /// Also compare unrolled and unit steps on this many random states.
    #[arg(long, requires = "seed", default_value_t = 0)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TimingArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    cost: Option<PathBuf>,
}

#[derive(Args)]
struct MapStateArgs {
    /// Galois registry variant; the Fibonacci side is its sibling.
    #[arg(long, conflicts_with_all = ["fib", "galois"])]
    variant: Option<String>,
    #[arg(long, requires = "galois")]
    fib: Option<PathBuf>,
    #[arg(long, requires = "fib")]
    galois: Option<PathBuf>,
    /// Encoded state of the Fibonacci system (Galois with --reverse).
    #[arg(long)]
    state: String,
    #[arg(long)]
    reverse: bool,
}

/// Verdict-level failure, reported with exit status 1.
struct Negative;

struct Out {
    json: bool,
}

impl Out {
    fn field(&self, key: &str, value: impl std::fmt::Display) {
        if self.json {
            println!("{key}={value}");
        } else {
            println!("{key}: {value}");
        }
    }
}

struct Ctx {
    out: Out,
    order: BitOrder,
    transcription: Transcription,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        out: Out { json: cli.json },
        order: match cli.bit_order {
            Order::Lsb => BitOrder::Lsb,
            Order::Msb => BitOrder::Msb,
        },
        transcription: if cli.as_printed {
            Transcription::AsPrinted
        } else {
            Transcription::Official
        },
    };
    let res = match cli.cmd {
        Command::Keystream(a) => keystream(&ctx, a),
        Command::Transform(a) => transform(&ctx, a),
        Command::Verify(Verify::Uniform(a)) => verify_uniform(&ctx, a),
        Command::Verify(Verify::Collapse(a)) => verify_collapse(&ctx, a),
        Command::Verify(Verify::Equivalence(a)) => verify_equivalence(&ctx, a),
        Command::Verify(Verify::Parallel(a)) => verify_parallel(&ctx, a),
        Command::Analyze(Analyze::Timing(a)) => analyze_timing(&ctx, a),
        Command::MapState(a) => map_state(&ctx, a),
        Command::ListVariants => list_variants(&ctx),
    };
    match res {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Negative)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

type Outcome = Result<std::result::Result<(), Negative>>;

fn verdict(ok: bool) -> Outcome {
    Ok(if ok { Ok(()) } else { Err(Negative) })
}

fn read_spec(path: &Path) -> Result<SystemSpec> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc = text::parse_spec(&text).with_context(|| format!("{}", path.display()))?;
    Ok(doc.spec)
}

/// Registry name first, then file path.
fn resolve(ctx: &Ctx, name: &str) -> Result<SystemSpec> {
    if grain::variant_names().any(|n| n == name) {
        return Ok(grain::variant(name, ctx.transcription)?.system);
    }
    let path = Path::new(name);
    if !path.exists() {
        bail!("{name} is neither a registry variant nor a readable file");
    }
    read_spec(path)
}

fn load_source(ctx: &Ctx, src: &Source) -> Result<SystemSpec> {
    match (&src.variant, &src.spec) {
        (Some(v), None) => Ok(grain::variant(v, ctx.transcription)?.system),
        (None, Some(p)) => read_spec(p),
        _ => bail!("give exactly one of --variant or --spec"),
    }
}

fn pick_register<'a>(sys: &'a SystemSpec, name: Option<&str>) -> Result<&'a RegisterSpec> {
    if let Some(n) = name {
        return sys
            .register(n)
            .ok_or_else(|| anyhow!("system {} has no register {n}", sys.name()));
    }
    match sys.registers() {
        [only] => Ok(only),
        regs => regs
            .iter()
            .find(|r| r.id().as_str() == "b")
            .ok_or_else(|| anyhow!("system has several registers; choose one with --register")),
    }
}

fn read_cost(path: Option<&PathBuf>) -> Result<CostModel> {
    match path {
        None => Ok(CostModel::default()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(text::parse_cost_model(&text).with_context(|| format!("{}", p.display()))?)
        }
    }
}

fn keystream(ctx: &Ctx, a: KeystreamArgs) -> Outcome {
    let v = grain::variant(&a.variant, ctx.transcription)?;
    let start = match &a.state {
        Some(s) => codec::decode_state(&v.system, s)?,
        None => {
            let key = a.key.as_deref().expect("clap requires key without state");
            let iv = a.iv.as_deref().expect("clap requires iv without state");
            let kv = KeyIv::from_hex(&v, key, iv, ctx.order).with_context(|| {
                format!("--key needs {} bits and --iv {} bits", v.key_bits, v.iv_bits)
            })?;
            let mode = match a.init {
                Init::Native => InitMode::Native,
                Init::Equivalence => InitMode::Equivalence,
            };
            grain::initialize(&v, &grain::load(&v, &kv)?, mode)?
        }
    };
    let (bits, end) = grain::generate_keystream(&v, &start, a.bits);
    let hex = codec::pack_bits(&bits, ctx.order);
    if ctx.out.json {
        ctx.out.field("variant", v.name);
        ctx.out.field("bits", a.bits);
        ctx.out.field("keystream", &hex);
    } else {
        println!("{hex}");
    }
    if a.show_state {
        ctx.out.field("state", codec::encode_state(&v.system, &end));
    }
    verdict(true)
}

fn transform(ctx: &Ctx, a: TransformArgs) -> Outcome {
    let sys = load_source(ctx, &a.source)?;
    let reg = pick_register(&sys, a.register.as_deref())?.clone();
    let (result, warnings, script) = if let Some(path) = &a.script {
        let body = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let script = text::parse_script(&body).with_context(|| format!("{}", path.display()))?;
        if let Some(mv) = script.moves.iter().find(|m| m.register != *reg.id()) {
            bail!("script moves register {}, transforming {}", mv.register, reg.id());
        }
        match galois::check_script(&reg, &script, Some(&sys)) {
            Ok(o) => (o.register, o.warnings, script),
            Err(f) => {
                ctx.out.field("status", "rejected");
                ctx.out.field("move", f.move_index + 1);
                ctx.out.field("reason", f.reason);
                return verdict(false);
            }
        }
    } else {
        let (k, t) = (a.k.expect("clap"), a.terminal.expect("clap"));
        if k == 0 {
            bail!("--k must be at least 1");
        }
        let d = galois::auto_distribute(&reg, t, k, &read_cost(a.cost.as_ref())?)?;
        let mut warnings = Vec::new();
        if !d.unshiftable.is_empty() {
            let list: Vec<String> = d.unshiftable.iter().map(|t| t.to_string()).collect();
            warnings.push(format!("left at the top bit: {}", list.join(", ")));
        }
        let required = galois::required_terminal_bit(&sys, reg.id().as_str())?;
        if t < required {
            warnings.push(format!("terminal {t} is below {required}, the lowest bit the outputs allow"));
        }
        (d.register, warnings, d.script)
    };
    let new_sys = sys.with_register(result.clone())?;
    let doc = text::format_spec(&new_sys);
    if let Some(p) = &a.emit_script {
        fs::write(p, text::format_script(&script)).with_context(|| format!("writing {}", p.display()))?;
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    match &a.out {
        Some(p) => {
            fs::write(p, &doc).with_context(|| format!("writing {}", p.display()))?;
            ctx.out.field("status", "ok");
            ctx.out.field("moves", script.moves.len());
            ctx.out.field("terminal_bit", galois::terminal_bit(&result));
            ctx.out.field("feedback_bits", join(result.explicit().keys().rev()));
            ctx.out.field("warnings", warnings.len());
        }
        None => print!("{doc}"),
    }
    verdict(true)
}

fn join<T: std::fmt::Display>(it: impl IntoIterator<Item = T>) -> String {
    it.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn verify_uniform(ctx: &Ctx, a: UniformArgs) -> Outcome {
    let sys = load_source(ctx, &a.source)?;
    let reg = pick_register(&sys, a.register.as_deref())?;
    if let Some(t) = a.terminal {
        if t >= reg.len() {
            bail!("terminal {t} is outside register {} of length {}", reg.id(), reg.len());
        }
    }
    let rep = match a.terminal {
        Some(t) => galois::check_uniform_at(reg, t),
        None => galois::check_uniform(reg),
    };
    ctx.out.field("register", reg.id());
    ctx.out.field("uniform", rep.uniform);
    ctx.out.field("terminal_bit", rep.terminal_bit);
    for v in &rep.violations {
        ctx.out.field("violation", format!("bit {} {:?}: {}", v.bit, v.kind, v.detail));
    }
    verdict(rep.uniform)
}

fn verify_collapse(ctx: &Ctx, a: CollapseArgs) -> Outcome {
    let sys = load_source(ctx, &a.source)?;
    let fib_sys = match (&a.fib, &a.source.variant) {
        (Some(f), _) => resolve(ctx, f)?,
        (None, Some(v)) => grain::fibonacci_sibling(&grain::variant(v, ctx.transcription)?).system,
        (None, None) => bail!("--fib is required with --spec"),
    };
    let reg = pick_register(&sys, a.register.as_deref())?;
    let fib = pick_register(&fib_sys, Some(reg.id().as_str()))?;
    let collapsed = galois::collapse_to_fibonacci(reg)?;
    let top = reg.len() - 1;
    let (extra, missing) = galois::term_difference(&collapsed.feedback(top), &fib.feedback(top));
    let equal = collapsed == *fib;
    ctx.out.field("register", reg.id());
    ctx.out.field("collapse_equal", equal);
    ctx.out.field("collapsed_terms", collapsed.feedback(top).terms().len());
    if !extra.is_empty() {
        ctx.out.field("extra", join(&extra));
    }
    if !missing.is_empty() {
        ctx.out.field("missing", join(&missing));
    }
    if !equal && collapsed.explicit().range(..top).next().is_some() {
        ctx.out.field("note", "collapsed register still has feedback below the top bit");
    }
    for (bit, term, image) in galois::duplicate_images(reg) {
        ctx.out.field("duplicate", format!("{term} at bit {bit} lifts to {image}"));
    }
    verdict(equal)
}

fn verify_equivalence(ctx: &Ctx, a: EquivalenceArgs) -> Outcome {
    let sa = resolve(ctx, &a.a)?;
    let sb = resolve(ctx, &a.b)?;
    let v = if a.exhaustive {
        let ra = pick_register(&sa, a.register.as_deref())?;
        let rb = pick_register(&sb, Some(ra.id().as_str()))?;
        ctx.out.field("method", "exhaustive");
        galois::check_equivalence_exhaustive(ra, rb, a.horizon)?
    } else if a.mapped {
        let reg = pick_register(&sa, a.register.as_deref())?.id().clone();
        let modes: &[&str] = if a.init_loops { &[grain::INIT_MODE] } else { &[] };
        ctx.out.field("method", "mapped");
        ctx.out.field("trials", a.trials);
        ctx.out.field("cycles", a.cycles);
        galois::check_equivalence_mapped(
            &sa,
            &sb,
            reg.as_str(),
            a.trials,
            a.cycles,
            a.seed.expect("clap requires seed"),
            modes,
        )?
    } else {
        bail!("choose --exhaustive or --mapped");
    };
    match &v {
        Verdict::Equal => ctx.out.field("verdict", "equal"),
        Verdict::Unequal(c) => {
            ctx.out.field("verdict", "unequal");
            ctx.out.field("origin", &c.origin);
            ctx.out.field("state", codec::pack_bits(&c.state, BitOrder::Lsb));
            ctx.out.field("cycle", c.cycle);
            ctx.out.field("prefix", c.prefix.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>());
            ctx.out.field("detail", &c.detail);
        }
    }
    verdict(v.is_equal())
}

fn verify_parallel(ctx: &Ctx, a: ParallelArgs) -> Outcome {
    let sys = load_source(ctx, &a.source)?;
    let declared = match &a.source.variant {
        Some(v) => Some(grain::variant(v, ctx.transcription)?),
        None => None,
    };
    let reg = pick_register(&sys, a.register.as_deref())?;
    let k = a
        .k
        .or(declared.as_ref().map(|v| v.parallel_degree))
        .unwrap_or(1);
    if k == 0 {
        bail!("--k must be at least 1");
    }
    let t = match a.terminal.or(declared.as_ref().and_then(|v| v.design_terminal)) {
        Some(t) => t,
        None => galois::terminal_bit(reg),
    };
    if t >= reg.len() {
        bail!("terminal {t} is outside register {}", reg.id());
    }
    let max = galois::max_hw_parallel_degree(&sys);
    let mut allowed = galois::allowed_feedback_positions(reg.len(), t, k);
    if k == 1 && !allowed.contains(&t) {
        allowed.push(t);
    }
    let stray: Vec<usize> = reg
        .explicit()
        .keys()
        .rev()
        .copied()
        .filter(|b| !allowed.contains(b))
        .collect();
    ctx.out.field("max_parallel_degree", max);
    ctx.out.field("k", k);
    ctx.out.field("terminal_bit", t);
    ctx.out.field("allowed_positions", join(&allowed));
    ctx.out.field("feedback_bits", join(reg.explicit().keys().rev()));
    let mut ok = stray.is_empty();
    if !ok {
        ctx.out.field("outside_allowed", join(&stray));
    }
    let mut states = vec![SystemState::zeros(&sys)];
    if let Some(seed) = a.seed {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..a.samples {
            let regs = sys
                .registers()
                .iter()
                .map(|r| (0..r.len()).map(|_| rng.gen()).collect())
                .collect();
            states.push(SystemState::from_registers(&sys, regs)?);
        }
    }
    let mut unrolled = true;
    for st in &states {
        for modes in [&[][..], &[grain::INIT_MODE][..]] {
            match sys.unrolled_step(st, k, modes) {
                Ok((fast, _)) => {
                    let mut slow = st.clone();
                    for _ in 0..k {
                        slow = sys.step(&slow, modes);
                    }
                    unrolled &= fast == slow;
                }
                Err(e) => {
                    ctx.out.field("unroll_error", e);
                    unrolled = false;
                    break;
                }
            }
        }
        if !unrolled {
            break;
        }
    }
    ctx.out.field("unrolled_states", states.len());
    ctx.out.field("unrolled_matches", unrolled);
    ok &= unrolled;
    verdict(ok)
}

fn analyze_timing(ctx: &Ctx, a: TimingArgs) -> Outcome {
    let sys = load_source(ctx, &a.source)?;
    let cost = read_cost(a.cost.as_ref())?;
    let rep = timing::critical_depths(&sys);
    ctx.out.field("system", sys.name());
    for (name, d) in &rep.expr_depths {
        ctx.out.field(&format!("depth.{name}"), d);
    }
    for (reg, d) in &rep.register_depths {
        ctx.out.field(&format!("register_depth.{reg}"), d);
    }
    ctx.out.field("keygen_depth", rep.keygen_depth);
    ctx.out.field("init_depth", rep.init_depth);
    ctx.out.field("divider", rep.divider);
    if let Some(ge) = rep.divider_area_ge {
        ctx.out.field("divider_area_ge", ge);
    }
    for w in &rep.warnings {
        ctx.out.field("warning", w);
    }
    let area = timing::area_proxy(&sys, &cost);
    ctx.out.field("xor2_gates", area.xor_gates);
    ctx.out.field("and2_gates", area.and_gates);
    ctx.out.field("weighted_area", area.weighted);
    verdict(true)
}

fn map_state(ctx: &Ctx, a: MapStateArgs) -> Outcome {
    let (fib, gal) = match (&a.variant, &a.fib, &a.galois) {
        (Some(v), None, None) => {
            let gv = grain::variant(v, ctx.transcription)?;
            (grain::fibonacci_sibling(&gv).system, gv.system)
        }
        (None, Some(f), Some(g)) => (read_spec(f)?, read_spec(g)?),
        _ => bail!("give --variant, or both --fib and --galois"),
    };
    if fib.registers().len() != gal.registers().len() {
        bail!("systems have different register counts");
    }
    let (from, to) = if a.reverse { (&gal, &fib) } else { (&fib, &gal) };
    let st = codec::decode_state(from, &a.state)?;
    let mut regs = Vec::with_capacity(st.registers().len());
    for ((fr, gr), bits) in fib.registers().iter().zip(gal.registers()).zip(st.registers()) {
        if fr.id() != gr.id() || fr.len() != gr.len() {
            bail!("register {} does not pair with {}", fr.id(), gr.id());
        }
        regs.push(if fr == gr {
            bits.clone()
        } else if a.reverse {
            let back = galois::unmap_state(gr, bits)?;
            // unmap alone does not prove the pair belongs together
            galois::map_initial_state(fr, gr, &back)?;
            back
        } else {
            galois::map_initial_state(fr, gr, bits)?
        });
    }
    let mapped = SystemState::from_registers(to, regs)?.with_cycle(st.cycle());
    let hex = codec::encode_state(to, &mapped);
    if ctx.out.json {
        ctx.out.field("system", to.name());
        ctx.out.field("state", hex);
    } else {
        println!("{hex}");
    }
    verdict(true)
}

fn list_variants(ctx: &Ctx) -> Outcome {
    for name in grain::variant_names() {
        let v = grain::variant(name, ctx.transcription)?;
        let terminal = galois::terminal_bit(v.nlfsr());
        if ctx.out.json {
            println!(
                "variant={name} key_bits={} iv_bits={} init_cycles={} k={} terminal_bit={terminal} sibling={}",
                v.key_bits, v.iv_bits, v.init_cycles, v.parallel_degree, v.sibling
            );
        } else {
            println!(
                "{name:<20} key {:>3}  iv {:>3}  init {:>3}  k {:>2}  terminal {terminal:>3}",
                v.key_bits, v.iv_bits, v.init_cycles, v.parallel_degree
            );
        }
    }
    verdict(true)
}
