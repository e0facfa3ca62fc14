//! `repkit` command-line front end. Every report is JSON on stdout (or the
//! `--report` file) and carries the toolkit version, seed and tolerances.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::value::RawValue;

use repkit::decomposition::{commutant_basis, isotypic_decompose};
use repkit::equivariant::{check_equivariance, equivariant_generators, paper_swap_six};
use repkit::groups::{
    identify_small_group, make_cyclic, make_dihedral, make_symmetric, verify_group_axioms, FiniteGroup, GroupSpec,
    SymmetrySource,
};
use repkit::qml::{
    eigenspace_invariance_check, label_invariance_check, symmetry_test, train, Loss, QmlModel,
    TaskKind, TaskSpec, TrainConfig,
};
use repkit::representations::{
    bitflip_rep, dihedral_rep_s3, left_regular_rep, perm_rep_qubits, su2_fundamental, swap_rep,
    tensor_power, translation_rep, verify_homomorphism, RepDocument, RepFile, Representation,
};
use repkit::serial::{Fixed, MatrixJson};
use repkit::twirl::TwirlContext;
use repkit::{ComplexMatrix, Error, Tolerance, VERSION};

#[derive(Parser)]
#[command(name = "repkit", version, about = "Representation theory toolkit for symmetric quantum machine learning")]
struct Cli {
    /// Absolute zero threshold.
    #[arg(long, global = true, default_value_t = Tolerance::default().absolute)]
    tol_abs: f64,
    /// Relative zero threshold.
    #[arg(long, global = true, default_value_t = Tolerance::default().relative)]
    tol_rel: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Progress notes on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build, check and name finite groups.
    #[command(subcommand)]
    Group(GroupCmd),
    /// Build and check representations.
    #[command(subcommand)]
    Rep(RepCmd),
    /// Hermitian basis of the commutant (invariant operators for adjoint files).
    Commutant {
        #[arg(long)]
        rep: PathBuf,
    },
    /// Isotypic block decomposition.
    Decompose {
        #[arg(long)]
        rep: PathBuf,
    },
    /// Twirl an operator over the group.
    Twirl {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long)]
        op: PathBuf,
    },
    /// Equivariant generator basis of a representation, or a named generator list.
    Equivariant {
        #[arg(long, required_unless_present = "preset")]
        rep: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<GeneratorPreset>,
    },
    /// Classification tasks.
    #[command(subcommand)]
    Task(TaskCmd),
    /// Does a Hermitian operator commute with a representation?
    Symtest {
        #[arg(long)]
        h: PathBuf,
        #[arg(long)]
        rep: PathBuf,
        /// Also check eigenspace invariance.
        #[arg(long)]
        eigenspaces: bool,
    },
}

#[derive(Subcommand)]
enum GroupCmd {
    Make {
        #[arg(long, value_enum)]
        kind: GroupKind,
        #[arg(long)]
        n: usize,
        /// Emit the explicit composition table instead of the family name.
        #[arg(long)]
        table: bool,
    },
    Verify {
        #[arg(long)]
        group: PathBuf,
    },
    Identify {
        #[arg(long)]
        group: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupKind {
    Cyclic,
    Symmetric,
    Dihedral,
}

#[derive(Subcommand)]
enum RepCmd {
    /// Write a built-in representation as a rep file.
    Make {
        #[arg(long, value_enum)]
        preset: RepPreset,
    },
    Verify {
        #[arg(long)]
        rep: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RepPreset {
    Su2Fundamental,
    Su2Tensor2,
    Su2Adjoint,
    /// su(2) acting identically on three qubits (total spin).
    Su2Local,
    Swap,
    SwapAdjoint,
    Bitflip1,
    Bitflip2,
    DihedralS3,
    PermQubits3,
    Translation4,
    Z4Regular,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorPreset {
    PaperSwapSix,
}

#[derive(Subcommand)]
enum TaskCmd {
    /// Generate a dataset, train the equivariant model, report accuracy and invariance.
    Run {
        #[arg(long)]
        name: String,
        /// Copies of the input state; defaults to the task's model.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, value_enum, default_value_t = LossArg::Mse)]
        loss: LossArg,
        /// Per-epoch CSV trace.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also dump the generated dataset as JSON.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Mse,
    Bce,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Invalid(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<Output, Failure>;

/// A report plus whether it represents a passed check.
struct Output {
    body: Box<RawValue>,
    ok: bool,
    envelope: bool,
}

impl Output {
    fn report(body: impl Serialize) -> Result<Self, Failure> {
        Ok(Output {
            body: to_value(body)?,
            ok: true,
            envelope: true,
        })
    }

    fn artifact(body: impl Serialize) -> Result<Self, Failure> {
        Ok(Output {
            body: to_value(body)?,
            ok: true,
            envelope: false,
        })
    }

    fn failing_if(mut self, bad: bool) -> Self {
        self.ok = !bad;
        self
    }
}

// Bodies are kept as raw JSON so the fixed-digit numbers survive untouched.
fn to_value(x: impl Serialize) -> Result<Box<RawValue>, Failure> {
    serde_json::value::to_raw_value(&x).map_err(|e| Failure::Invalid(e.to_string()))
}

/// A JSON object that keeps its keys in insertion order.
struct Obj(Vec<(&'static str, Box<RawValue>)>);

impl Serialize for Obj {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

macro_rules! obj {
    ($($k:literal : $v:expr),* $(,)?) => {
        Obj(vec![$(($k, to_value($v)?)),*])
    };
}

/// Re-indents compact JSON; numbers and strings pass through byte for byte.
/// Arrays holding only scalars stay on one line.
fn pretty(compact: &str) -> String {
    let bytes = compact.as_bytes();
    let mut out = String::with_capacity(compact.len() * 2);
    let mut depth = 0usize;
    let mut inline = 0usize;
    let mut i = 0;
    let newline = |out: &mut String, depth: usize| {
        out.push('\n');
        out.push_str(&"  ".repeat(depth));
    };
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'"' => {
                let end = string_end(bytes, i);
                out.push_str(&compact[i..end]);
                i = end;
                continue;
            }
            b'{' | b'[' => {
                out.push(c as char);
                if matches!(bytes.get(i + 1), Some(b'}') | Some(b']')) {
                    out.push(bytes[i + 1] as char);
                    i += 2;
                    continue;
                }
                if inline == 0 && c == b'[' && flat_array(bytes, i + 1) {
                    inline = 1;
                } else if inline > 0 {
                    inline += 1;
                } else {
                    depth += 1;
                    newline(&mut out, depth);
                }
            }
            b'}' | b']' => {
                if inline > 0 {
                    inline -= 1;
                } else {
                    depth -= 1;
                    newline(&mut out, depth);
                }
                out.push(c as char);
            }
            b',' => {
                out.push(',');
                if inline > 0 {
                    out.push(' ');
                } else {
                    newline(&mut out, depth);
                }
            }
            b':' => out.push_str(": "),
            _ => out.push(c as char),
        }
        i += 1;
    }
    out.push('\n');
    out
}

fn string_end(bytes: &[u8], start: usize) -> usize {
    let mut i = start + 1;
    while bytes[i] != b'"' {
        i += if bytes[i] == b'\\' { 2 } else { 1 };
    }
    i + 1
}

fn flat_array(bytes: &[u8], mut i: usize) -> bool {
    while i < bytes.len() {
        match bytes[i] {
            b'"' => i = string_end(bytes, i),
            b'[' | b'{' => return false,
            b']' => return true,
            _ => i += 1,
        }
    }
    false
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn load_rep(path: &Path, tol: &Tolerance) -> Result<RepFile, Failure> {
    let doc: RepDocument = serde_json::from_str(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    Ok(doc.load(tol)?)
}

fn load_matrix(path: &Path) -> Result<ComplexMatrix, Failure> {
    let m: MatrixJson =
        serde_json::from_str(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    Ok(m.0)
}

fn load_group(path: &Path, tol: &Tolerance) -> Result<FiniteGroup, Failure> {
    let spec = GroupSpec::from_json(&read(path)?)?;
    match spec.build(tol)? {
        SymmetrySource::Finite(g) => Ok(g),
        SymmetrySource::Lie(_) => Err(Failure::Invalid("expected a finite group".into())),
    }
}

/// The representation whose commutant / decomposition a rep file asks for.
fn acting_rep(file: &RepFile) -> Representation {
    match file {
        RepFile::Plain(r) => r.clone(),
        RepFile::Adjoint(a) => a.rep.clone(),
    }
}

fn fixed_list(ms: &[ComplexMatrix]) -> Vec<MatrixJson> {
    ms.iter().cloned().map(MatrixJson).collect()
}

fn rep_preset(p: RepPreset) -> Result<RepDocument, Failure> {
    let f = su2_fundamental();
    Ok(match p {
        RepPreset::Su2Fundamental => RepDocument::plain(&f),
        RepPreset::Su2Tensor2 => RepDocument::plain(&tensor_power(&f, 2)?),
        RepPreset::Su2Adjoint => RepDocument::adjoint(&f),
        RepPreset::Su2Local => RepDocument::plain(&tensor_power(&f, 3)?.with_name("su2-local")),
        RepPreset::Swap => RepDocument::plain(&swap_rep()),
        RepPreset::SwapAdjoint => RepDocument::adjoint(&swap_rep()),
        RepPreset::Bitflip1 => RepDocument::plain(&bitflip_rep(1)?),
        RepPreset::Bitflip2 => RepDocument::plain(&bitflip_rep(2)?),
        RepPreset::DihedralS3 => RepDocument::plain(&dihedral_rep_s3()),
        RepPreset::PermQubits3 => RepDocument::plain(&perm_rep_qubits(3)?),
        RepPreset::Translation4 => RepDocument::plain(&translation_rep(4)?),
        RepPreset::Z4Regular => RepDocument::plain(&left_regular_rep(&make_cyclic(4)?)?),
    })
}

fn run(cli: &Cli, tol: &Tolerance) -> Outcome {
    let note = |msg: &str| {
        if cli.verbose > 0 {
            eprintln!("repkit: {msg}");
        }
    };
    match &cli.cmd {
        Cmd::Group(GroupCmd::Make { kind, n, table }) => {
            let spec = match kind {
                GroupKind::Cyclic => GroupSpec::Cyclic { n: *n },
                GroupKind::Symmetric => GroupSpec::Symmetric { n: *n },
                GroupKind::Dihedral => GroupSpec::Dihedral { n: *n },
            };
            let built = spec.build(tol)?;
            Output::artifact(if *table { built.to_spec() } else { spec })
        }
        Cmd::Group(GroupCmd::Verify { group }) => {
            let spec = GroupSpec::from_json(&read(group)?)?;
            let g = match &spec {
                GroupSpec::Table { table, labels, .. } => FiniteGroup::from_table_trusted(table.clone(), labels.clone()),
                GroupSpec::Cyclic { n } => make_cyclic(*n),
                GroupSpec::Symmetric { n } => make_symmetric(*n),
                GroupSpec::Dihedral { n } => make_dihedral(*n),
                GroupSpec::Lie { .. } => return Err(Failure::Invalid("expected a finite group".into())),
            };
            match g {
                Ok(g) => {
                    let axioms = verify_group_axioms(&g)?;
                    let clean = axioms.is_clean();
                    Ok(Output::report(obj!{"order": g.order(), "axioms": axioms, "is_group": clean})?
                        .failing_if(!clean))
                }
                Err(e) => Ok(Output::report(obj!{"is_group": false, "reason": e.to_string()})?.failing_if(true)),
            }
        }
        Cmd::Group(GroupCmd::Identify { group }) => {
            let g = load_group(group, tol)?;
            Output::report(obj!{
                "order": g.order(),
                "abelian": g.is_abelian(),
                "name": identify_small_group(&g),
            })
        }
        Cmd::Rep(RepCmd::Make { preset }) => Output::artifact(rep_preset(*preset)?),
        Cmd::Rep(RepCmd::Verify { rep }) => {
            let file = load_rep(rep, tol)?;
            let r = file.base();
            Output::report(obj!{
                "name": r.name(),
                "flavor": if r.is_finite() { "finite" } else { "lie" },
                "dim": r.dim(),
                "adjoint": file.is_adjoint(),
                "structure_residual": Fixed(r.structure_residual()),
                "homomorphism_residual": Fixed(verify_homomorphism(r)),
                "valid": true,
            })
        }
        Cmd::Commutant { rep } => {
            let file = load_rep(rep, tol)?;
            // for an adjoint file the invariant operators live on the base carrier
            let base = file.base();
            let cb = commutant_basis(base, tol);
            let mut sample = base.action_generators().to_vec();
            sample.extend(base.test_elements(20, cli.seed));
            Output::report(obj!{
                "dim": cb.dim(),
                "carrier_dim": cb.carrier_dim,
                "gram_residual": Fixed(cb.gram_residual()),
                "commutator_residual": Fixed(cb.commutator_residual(&sample)),
                "basis": fixed_list(&cb.basis),
            })
        }
        Cmd::Decompose { rep } => {
            let file = load_rep(rep, tol)?;
            let r = acting_rep(&file);
            note(&format!("decomposing {} (dim {})", r.name(), r.dim()));
            let dec = isotypic_decompose(&r, cli.seed, tol)?;
            Output::report(dec.report())
        }
        Cmd::Twirl { rep, op } => {
            let file = load_rep(rep, tol)?;
            let o = load_matrix(op)?;
            let ctx = TwirlContext::auto(file.base(), tol)?;
            let t = ctx.twirl(&o)?;
            let again = ctx.twirl(&t)?;
            Output::report(obj!{
                "mode": ctx.mode,
                "twirled": MatrixJson(t.clone()),
                "residuals": obj!{
                    "idempotence": Fixed((&again - &t).norm()),
                    "commutation": Fixed(ctx.commutation_residual(&t, cli.seed)),
                    "trace": Fixed((t.trace() - o.trace()).norm()),
                },
            })
        }
        Cmd::Equivariant { rep, preset } => match (rep, preset) {
            (Some(path), None) => {
                let file = load_rep(path, tol)?;
                let set = equivariant_generators(file.base(), tol);
                Output::report(set.report())
            }
            (None, Some(GeneratorPreset::PaperSwapSix)) => {
                let six = paper_swap_six();
                let set = equivariant_generators(&swap_rep(), tol);
                let comm = six
                    .iter()
                    .map(|h| check_equivariance(h, &swap_rep(), 0, cli.seed))
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                let span = six.iter().map(|h| set.span_residual(h)).fold(0.0, f64::max);
                Output::report(obj!{
                    "preset": "paper-swap-six",
                    "commutant_dim": set.dim(),
                    "commutation_residual": Fixed(comm),
                    "span_residual": Fixed(span),
                    "generators": fixed_list(&six),
                })
            }
            _ => Err(Failure::Invalid("give either --rep or --preset".into())),
        },
        Cmd::Task(TaskCmd::Run {
            name,
            k,
            epochs,
            samples,
            lr,
            loss,
            out,
            dataset,
        }) => {
            let task: TaskKind = name.parse()?;
            let k = k.unwrap_or(task.default_copies());
            let data = TaskSpec::new(task, *samples, cli.seed).generate()?;
            if let Some(p) = dataset {
                fs::write(p, data.to_json()?)?;
            }
            let model = QmlModel::for_task(task, k, repkit::random::derive_seed(cli.seed, 1), tol)?;
            let cfg = TrainConfig {
                learning_rate: *lr,
                epochs: *epochs,
                batch: 0,
                seed: cli.seed,
                fd_step: 1e-4,
                loss: match loss {
                    LossArg::Mse => Loss::Mse,
                    LossArg::Bce => Loss::Bce,
                },
            };
            note(&format!("training {task} with k = {k} for {epochs} epochs"));
            let trained = train(&model, &data, &cfg)?;
            if let Some(p) = out {
                let mut csv = String::from("epoch,loss,train_accuracy\n");
                for r in &trained.history {
                    csv.push_str(&format!("{},{:.16e},{:.16e}\n", r.epoch, r.loss, r.train_accuracy));
                }
                fs::write(p, csv)?;
            }
            let m = &trained.model;
            let lifted = tensor_power(&task.symmetry(), k)?;
            let w = m.circuit.unitary(&m.generators)?;
            let deviation = label_invariance_check(m, &task.symmetry(), &data, 20, cli.seed)?;
            Output::report(obj!{
                "task": task,
                "k": k,
                "samples": data.len(),
                "epochs": epochs,
                "accuracy": Fixed(m.accuracy(&data)?),
                "final_loss": trained.history.last().map(|r| Fixed(r.loss)),
                "invariance_deviation": Fixed(deviation),
                "residuals": obj!{
                    "circuit_commutation": Fixed(check_equivariance(&w, &lifted, 20, cli.seed)?),
                    "measurement_commutation": Fixed(check_equivariance(&m.measurement, &lifted, 20, cli.seed)?),
                },
                "readout": [Fixed(m.readout.0), Fixed(m.readout.1)],
            })
        }
        Cmd::Symtest { h, rep, eigenspaces } => {
            let file = load_rep(rep, tol)?;
            let hm = load_matrix(h)?;
            let r = file.base();
            let sym = symmetry_test(&hm, r, tol)?;
            let mut body = obj! {"residual": sym.residual, "commutes": sym.commutes};
            if *eigenspaces && sym.commutes {
                body.0.push(("eigenspaces", to_value(eigenspace_invariance_check(&hm, r, tol)?)?));
            }
            Output::report(body)
        }
    }
}

fn render(cli: &Cli, tol: &Tolerance, body: Box<RawValue>, envelope: bool) -> Result<String, Failure> {
    let compact = if envelope {
        let env = obj! {
            "toolkit": "repkit",
            "version": VERSION,
            "command": command_name(&cli.cmd),
            "seed": cli.seed,
            "tolerance": obj! {"absolute": Fixed(tol.absolute), "relative": Fixed(tol.relative)},
            "result": body,
        };
        serde_json::to_string(&env)
    } else {
        serde_json::to_string(&body)
    };
    Ok(pretty(&compact.map_err(|e| Failure::Invalid(e.to_string()))?))
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Group(GroupCmd::Make { .. }) => "group make",
        Cmd::Group(GroupCmd::Verify { .. }) => "group verify",
        Cmd::Group(GroupCmd::Identify { .. }) => "group identify",
        Cmd::Rep(RepCmd::Make { .. }) => "rep make",
        Cmd::Rep(RepCmd::Verify { .. }) => "rep verify",
        Cmd::Commutant { .. } => "commutant",
        Cmd::Decompose { .. } => "decompose",
        Cmd::Twirl { .. } => "twirl",
        Cmd::Equivariant { .. } => "equivariant",
        Cmd::Task(_) => "task run",
        Cmd::Symtest { .. } => "symtest",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let tol = match Tolerance::new(cli.tol_abs, cli.tol_rel) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cli, &tol) {
        Ok(out) => {
            let text = match render(&cli, &tol, out.body, out.envelope) {
                Ok(t) => t,
                Err(Failure::Invalid(e) | Failure::Numerical(e)) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let written = match &cli.report {
                Some(p) => fs::write(p, text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(if out.ok { 0 } else { 1 })
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
