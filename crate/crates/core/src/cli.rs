//! The `lpred` command line: argument parsing, dispatch and report output.
//!
//! Every subcommand writes one JSON report (or CSV with `--csv` where a
//! table exists) to stdout or `--out`. Exit status: 0 on success, 1 when
//! the report records a finding about the data, 2 on bad input.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::embedding::{
    cfh_verify, embed_l2_exact, embed_search, holder_distortion, minimal_k, net_snap_greedy,
    oracle_embed, round_to_dense, transfer_dense, Embedding, L2Outcome, SearchOptions, SnapMap,
    SnapParams,
};
use crate::error::{Error, Result};
use crate::metric::{quotient_with_classes, snowflake, validate_metric, FiniteMetricSpace};
use crate::nets::{build_z, chain_number, chain_witness, greedy_net, net_violations};
use crate::reduction::{
    build_theta, classify_tail, dense_nets, dense_snap, pair, partition_indices, simulate, unpair,
    verify_reduction_bounds, ReductionInstance, SimulateOptions, TailModel,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDING: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lpred",
    version,
    about = "Hölder embeddings, nets, chains and the ℓp-to-ℓq reduction on finite metric spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Write a CSV table instead of JSON (distance matrices and inequality
    /// tables only).
    #[arg(long, global = true)]
    pub csv: bool,
    /// Keep zero-distance pairs instead of quotienting them at load.
    #[arg(long, global = true)]
    pub keep_zero: bool,
}

#[derive(Debug, Args)]
pub struct MetricArg {
    /// Metric file: {"labels": [...], "d": [[...]...], "pseudo": bool}.
    #[arg(value_name = "METRIC")]
    pub metric: PathBuf,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Seed for every random choice; required.
    #[arg(long, env = "LPRED_SEED")]
    pub seed: Option<u64>,
}

impl SeedArg {
    fn get(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::InvalidArgument("this command is stochastic: pass --seed or set LPRED_SEED".into())
        })
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check symmetry, non-negativity, zero diagonal and the triangle inequality.
    Validate(MetricArg),
    /// Identify points at distance exactly zero.
    Quotient(MetricArg),
    /// Raise every distance to the power alpha in (0, 1].
    Snowflake {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long)]
        alpha: f64,
    },
    /// Greedy eps-net in label order or a given order.
    Net {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long)]
        eps: f64,
        /// JSON file listing every label once, in scan order.
        #[arg(long, value_name = "FILE")]
        order: Option<PathBuf>,
    },
    /// Minimal eps-chain between two points.
    Chain {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Largest minimal chain length over pairs closer than C (sampled link(C)).
    ChainNumber {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long)]
        eps: f64,
        #[arg(long = "C")]
        c: f64,
    },
    /// Chain-point sets Z_n for nested subsets F_n at scales 2^-l, l <= n.
    BuildZ {
        #[command(flatten)]
        metric: MetricArg,
        /// JSON file with a list of label lists F_0, F_1, ...
        #[arg(long = "F", value_name = "FILE")]
        f: PathBuf,
        #[arg(long = "C")]
        c: f64,
    },
    /// Hölder distortion of an embedding.
    Distortion {
        #[command(flatten)]
        metric: MetricArg,
        /// Embedding file: {"q": ..., "coords": {label: [...]}}.
        #[arg(long, value_name = "FILE")]
        embedding: PathBuf,
        #[arg(long)]
        alpha: f64,
    },
    /// Check the two-clause distortion guarantee split at scale C.
    Verify {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long, value_name = "FILE")]
        embedding: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long = "C")]
        c: f64,
        #[arg(long = "A")]
        a: f64,
        #[arg(long = "D")]
        d: f64,
    },
    /// Search for a low-distortion embedding into ℓq^dim.
    Embed {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long = "C")]
        c: Option<f64>,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Exact isometric embedding into Euclidean space, or a witness that none exists.
    EmbedL2(MetricArg),
    /// Exhaustive grid optimum for 2 or 3 points in dimension 1 or 2.
    Oracle {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
    },
    /// Move query points to pool points within a quarter of their least gap.
    Transfer {
        #[command(flatten)]
        metric: MetricArg,
        /// Query labels, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        points: Vec<String>,
        /// Pool labels, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        pool: Vec<String>,
    },
    /// Snap every level map onto a greedy eps_n-net and re-check the clauses.
    NetSnap {
        #[arg(long, value_name = "FILE")]
        instance: PathBuf,
        /// Also write the snapped instance here.
        #[arg(long, value_name = "FILE")]
        emit: Option<PathBuf>,
    },
    /// Move query points to pool points within 1/(4k).
    RoundDense {
        #[command(flatten)]
        metric: MetricArg,
        #[arg(long, value_delimiter = ',', required = true)]
        points: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        pool: Vec<String>,
        /// Defaults to the least admissible k.
        #[arg(long)]
        k: Option<u64>,
        #[arg(long = "C")]
        c: Option<f64>,
    },
    /// The pairing <n, m> = (n+m)(n+m+1)/2 + m, or its inverse with --k.
    Pairfn {
        #[arg(long, requires = "m", conflicts_with = "k")]
        n: Option<u64>,
        #[arg(long, requires = "n")]
        m: Option<u64>,
        #[arg(long)]
        k: Option<u64>,
    },
    /// Flattened image sequence theta(x) of a product point.
    Theta {
        #[arg(long, value_name = "FILE")]
        instance: PathBuf,
        /// One label per level, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<String>,
    },
    /// Split level indices into I1, I2, I3 with per-part power sums.
    Partition {
        /// Per-level distances, comma separated.
        #[arg(long = "d", value_delimiter = ',', required = true)]
        d: Vec<f64>,
        /// Per-level eps, comma separated; a single value is repeated.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long = "C")]
        c: f64,
        #[arg(long)]
        p: f64,
        /// Per-level image distances, comma separated.
        #[arg(long, value_delimiter = ',', requires = "q")]
        delta: Option<Vec<f64>>,
        #[arg(long)]
        q: Option<f64>,
    },
    /// Check the clauses of an instance and the six inequalities on pairs.
    ReduceVerify {
        #[arg(long, value_name = "FILE")]
        instance: PathBuf,
        /// Random pairs to check in addition to those in the file.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Snap a product point onto greedy nets of radius 2^-n.
    DenseSnap {
        /// One metric file per level, in level order.
        #[arg(long = "metric", value_name = "FILE", required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<String>,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Decide convergence of sum d_n^p for a tail model.
    Classify {
        /// Tail model as inline JSON or a file path.
        #[arg(long)]
        model: String,
        #[arg(long)]
        p: f64,
    },
    /// Sample product pairs following tail models and compare classifications.
    Simulate {
        #[arg(long, value_name = "FILE")]
        instance: PathBuf,
        /// JSON file with a list of tail models.
        #[arg(long, value_name = "FILE")]
        models: PathBuf,
        #[arg(long)]
        prefix: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = crate::reduction::simulate::DEFAULT_TAU)]
        tau: f64,
        #[command(flatten)]
        seed: SeedArg,
    },
}

/// A finished report: the JSON body, an optional CSV table, and whether
/// the run recorded a finding.
struct Report {
    body: Value,
    table: Option<Vec<Vec<String>>>,
    finding: bool,
}

impl Report {
    fn ok(body: Value) -> Self {
        Report {
            body,
            table: None,
            finding: false,
        }
    }

    fn finding_if(mut self, finding: bool) -> Self {
        self.finding = finding;
        self
    }

    fn with_table(mut self, table: Vec<Vec<String>>) -> Self {
        self.table = Some(table);
        self
    }
}

/// JSON pretty printer writing floats with 17 significant digits.
struct Precise<'a>(PrettyFormatter<'a>);

/// `%.17g`: fixed notation for decimal exponents in `[-5, 17)`, otherwise
/// scientific; trailing zeros trimmed.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim(&format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

impl Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_g17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with 17-digit floats.
pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Precise(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

fn to_csv_bytes(table: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for row in table {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize to JSON")
}

fn matrix_table(m: &FiniteMetricSpace) -> Vec<Vec<String>> {
    let mut rows = vec![std::iter::once(String::new())
        .chain(m.labels().iter().cloned())
        .collect()];
    for i in 0..m.len() {
        rows.push(
            std::iter::once(m.label(i).to_string())
                .chain(m.row(i).iter().map(|&d| format_g17(d)))
                .collect(),
        );
    }
    rows
}

/// A metric loaded from disk, quotiented unless `--keep-zero` was given.
/// Labels of merged points still resolve to their class.
struct Loaded {
    space: FiniteMetricSpace,
    alias: HashMap<String, usize>,
}

impl Loaded {
    fn new(path: &Path, keep_zero: bool) -> Result<Self> {
        let raw = FiniteMetricSpace::load(path)?;
        let report = validate_metric(&raw);
        if keep_zero || report.zero_pairs.is_empty() || !report.is_pseudometric() {
            return Ok(Loaded {
                space: raw,
                alias: HashMap::new(),
            });
        }
        let q = quotient_with_classes(&raw)?;
        let alias = raw
            .labels()
            .iter()
            .cloned()
            .zip(q.class_of.iter().copied())
            .collect();
        Ok(Loaded {
            space: q.space,
            alias,
        })
    }

    fn index(&self, label: &str) -> Result<usize> {
        match self.alias.get(label) {
            Some(&i) => Ok(i),
            None => self.space.index_of(label),
        }
    }

    fn indices(&self, labels: &[String]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.index(l)).collect()
    }

    fn labels_of(&self, idx: &[usize]) -> Vec<String> {
        idx.iter().map(|&i| self.space.label(i).to_string()).collect()
    }
}

fn read_json<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn snap_report(m: &Loaded, r: &SnapMap) -> Value {
    let map: serde_json::Map<String, Value> = r
        .points
        .iter()
        .zip(&r.image)
        .map(|(&u, &s)| (m.space.label(u).to_string(), json!(m.space.label(s))))
        .collect();
    let displacement: serde_json::Map<String, Value> = r
        .points
        .iter()
        .zip(&r.displacement)
        .map(|(&u, &d)| (m.space.label(u).to_string(), json!(d)))
        .collect();
    json!({
        "radius": r.radius,
        "map": map,
        "displacement": displacement,
        "certificate": r.certificate,
        "holds": r.certificate.holds(),
    })
}

/// Body written for errors that are findings about the data.
fn finding_body(e: &Error, labels: Option<&FiniteMetricSpace>) -> Value {
    let name = |i: usize| -> Value {
        match labels {
            Some(m) if i < m.len() => json!(m.label(i)),
            _ => json!(i),
        }
    };
    let detail = match e {
        Error::LinkBroken { u, v, eps } => {
            json!({"kind": "link_broken", "eps": eps, "witness": [name(*u), name(*v)], "sampled": true})
        }
        Error::ChainMissing { u, v, level } => {
            json!({"kind": "chain_missing", "level": level, "witness": [name(*u), name(*v)]})
        }
        Error::NoPoolPoint {
            point,
            radius,
            nearest,
        } => json!({"kind": "no_pool_point", "point": name(*point), "radius": radius, "nearest": nearest}),
        Error::Degenerate { u, v } => json!({"kind": "degenerate", "pair": [name(*u), name(*v)]}),
        Error::Uncovered {
            level,
            point,
            radius,
        } => json!({"kind": "uncovered", "level": level, "point": point, "radius": radius}),
        _ => json!({"kind": "error"}),
    };
    json!({"status": "finding", "message": e.to_string(), "detail": detail})
}

/// Runs one operation against a loaded metric, turning domain errors into
/// finding reports that name points by label.
fn on_metric(m: &Loaded, f: impl FnOnce(&Loaded) -> Result<Report>) -> Result<Report> {
    match f(m) {
        Err(e) if e.is_domain() => Ok(Report::ok(finding_body(&e, Some(&m.space))).finding_if(true)),
        other => other,
    }
}

fn random_choice(inst: &ReductionInstance, rng: &mut ChaCha8Rng) -> Vec<usize> {
    inst.levels
        .iter()
        .map(|l| rng.random_range(0..l.space.len()))
        .collect()
}

fn execute(cli: &Cli) -> Result<Report> {
    let kz = cli.keep_zero;
    match &cli.command {
        Command::Validate(a) => {
            let m = FiniteMetricSpace::load(&a.metric)?;
            let r = validate_metric(&m);
            let clean = r.is_clean();
            let mut body = to_value(&r);
            body["clean"] = json!(clean);
            Ok(Report::ok(body).finding_if(!clean))
        }
        Command::Quotient(a) => {
            let m = FiniteMetricSpace::load(&a.metric)?;
            let q = quotient_with_classes(&m)?;
            Ok(Report::ok(to_value(&q.space.to_file())).with_table(matrix_table(&q.space)))
        }
        Command::Snowflake { metric, alpha } => {
            let m = Loaded::new(&metric.metric, kz)?;
            let s = snowflake(&m.space, *alpha)?;
            Ok(Report::ok(to_value(&s.to_file())).with_table(matrix_table(&s)))
        }
        Command::Net { metric, eps, order } => {
            let m = Loaded::new(&metric.metric, kz)?;
            let order = match order {
                Some(p) => Some(m.indices(&read_json::<Vec<String>>(p)?)?),
                None => None,
            };
            let net = greedy_net(&m.space, *eps, order.as_deref())?;
            let v = net_violations(&m.space, &net);
            let assignment: serde_json::Map<String, Value> = (0..m.space.len())
                .map(|u| (m.space.label(u).to_string(), json!(m.space.label(net.snap(u)))))
                .collect();
            Ok(Report::ok(json!({
                "eps": eps,
                "members": m.labels_of(&net.members),
                "assignment": assignment,
                "violations": v,
            })))
        }
        Command::Chain {
            metric,
            eps,
            from,
            to,
        } => {
            let m = Loaded::new(&metric.metric, kz)?;
            let (u, v) = (m.index(from)?, m.index(to)?);
            let body = match chain_witness(&m.space, *eps, u, v)? {
                Some(c) => json!({
                    "eps": eps, "from": from, "to": to, "reachable": true,
                    "steps": c.steps, "points": m.labels_of(&c.points),
                }),
                None => json!({"eps": eps, "from": from, "to": to, "reachable": false}),
            };
            let unreachable = body["reachable"] == json!(false);
            Ok(Report::ok(body).finding_if(unreachable))
        }
        Command::ChainNumber { metric, eps, c } => {
            let m = Loaded::new(&metric.metric, kz)?;
            on_metric(&m, |m| {
                let r = chain_number(&m.space, *eps, *c)?;
                let mut body = to_value(&r);
                body["worst_pair"] = json!(r.worst_pair.map(|p| m.labels_of(&p)));
                Ok(Report::ok(body))
            })
        }
        Command::BuildZ { metric, f, c } => {
            let m = Loaded::new(&metric.metric, kz)?;
            let sets = read_json::<Vec<Vec<String>>>(f)?
                .iter()
                .map(|s| m.indices(s))
                .collect::<Result<Vec<_>>>()?;
            on_metric(&m, |m| {
                let z = build_z(&m.space, &sets, *c)?;
                let z: Vec<Vec<String>> = z.iter().map(|s| m.labels_of(s)).collect();
                Ok(Report::ok(json!({"C": c, "Z": z})))
            })
        }
        Command::Distortion {
            metric,
            embedding,
            alpha,
        } => {
            let m = Loaded::new(&metric.metric, kz)?;
            let t = Embedding::load(embedding, &m.space)?;
            on_metric(&m, |m| Ok(Report::ok(to_value(&holder_distortion(&m.space, &t, *alpha)?))))
        }
        Command::Verify {
            metric,
            embedding,
            alpha,
            c,
            a,
            d,
        } => {
            let m = Loaded::new(&metric.metric, kz)?;
            let t = Embedding::load(embedding, &m.space)?;
            let cert = cfh_verify(&m.space, &t, *alpha, *c, *a, *d)?;
            let passed = cert.passed();
            let mut body = to_value(&cert);
            body["passed"] = json!(passed);
            Ok(Report::ok(body).finding_if(!passed))
        }
        Command::Embed {
            metric,
            alpha,
            q,
            dim,
            c,
            restarts,
            seed,
        } => {
            let m = Loaded::new(&metric.metric, kz)?;
            let opts = SearchOptions {
                alpha: *alpha,
                q: *q,
                dim: *dim,
                c: *c,
                restarts: *restarts,
                seed: seed.get()?,
            };
            let r = embed_search(&m.space, &opts)?;
            let mut body = to_value(&opts);
            let result = to_value(&r);
            for (k, v) in result.as_object().expect("struct").iter() {
                body[k] = v.clone();
            }
            body["embedding"] = to_value(&r.embedding.to_file(&m.space)?);
            Ok(Report::ok(body).finding_if(r.degenerate))
        }
        Command::EmbedL2(a) => {
            let m = Loaded::new(&a.metric, kz)?;
            let out = embed_l2_exact(&m.space)?;
            let mut body = to_value(&out);
            let embedded = match &out {
                L2Outcome::Embedded { embedding, .. } => {
                    body["embedding"] = to_value(&embedding.to_file(&m.space)?);
                    true
                }
                L2Outcome::NotEmbeddable { .. } => false,
            };
            Ok(Report::ok(body).finding_if(!embedded))
        }
        Command::Oracle {
            metric,
            alpha,
            q,
            dim,
            grid_step,
        } => {
            let m = Loaded::new(&metric.metric, kz)?;
            let r = oracle_embed(&m.space, *alpha, *q, *dim, *grid_step)?;
            Ok(Report::ok(to_value(&r)))
        }
        Command::Transfer {
            metric,
            points,
            pool,
        } => {
            let m = Loaded::new(&metric.metric, kz)?;
            let (f, pool) = (m.indices(points)?, m.indices(pool)?);
            on_metric(&m, |m| {
                let r = transfer_dense(&m.space, &f, &pool)?;
                Ok(Report::ok(snap_report(m, &r)).finding_if(!r.certificate.holds()))
            })
        }
        Command::RoundDense {
            metric,
            points,
            pool,
            k,
            c,
        } => {
            let m = Loaded::new(&metric.metric, kz)?;
            let (f, pool) = (m.indices(points)?, m.indices(pool)?);
            let k = match k {
                Some(k) => *k,
                None => minimal_k(&m.space, &f, *c)?,
            };
            on_metric(&m, |m| {
                let r = round_to_dense(&m.space, &f, &pool, k, *c)?;
                let mut body = snap_report(m, &r);
                body["k"] = json!(k);
                Ok(Report::ok(body).finding_if(!r.certificate.holds()))
            })
        }
        Command::NetSnap { instance, emit } => {
            let (inst, _) = ReductionInstance::load(instance)?;
            let params = SnapParams {
                constants: inst.constants,
                eps: inst.eps.clone(),
            };
            match net_snap_greedy(&inst.levels, &params) {
                Err(e) if e.is_domain() => Ok(Report::ok(finding_body(&e, None)).finding_if(true)),
                Err(e) => Err(e),
                Ok(r) => {
                    if let Some(path) = emit {
                        let snapped = ReductionInstance::new(
                            r.derived.constants,
                            r.derived.eps.clone(),
                            r.derived.eta.clone(),
                            r.levels.clone(),
                        )?;
                        std::fs::write(path, to_json_bytes(&snapped.to_file())?)?;
                    }
                    let passed = r.verification.passed();
                    let mut body = to_value(&r);
                    body["passed"] = json!(passed);
                    Ok(Report::ok(body).finding_if(!passed))
                }
            }
        }
        Command::Pairfn { n, m, k } => match (n, m, k) {
            (Some(n), Some(m), None) => {
                let k = pair(*n, *m).ok_or_else(|| {
                    Error::InvalidArgument(format!("<{n}, {m}> does not fit in 64 bits"))
                })?;
                Ok(Report::ok(json!({"n": n, "m": m, "k": k})))
            }
            (None, None, Some(k)) => {
                let (n, m) = unpair(*k);
                Ok(Report::ok(json!({"k": k, "n": n, "m": m})))
            }
            _ => Err(Error::InvalidArgument("pass either --n and --m, or --k".into())),
        },
        Command::Theta { instance, x } => {
            let (inst, _) = ReductionInstance::load(instance)?;
            let x = inst.choice_from_labels(x)?;
            Ok(Report::ok(to_value(&build_theta(&inst, &x)?)))
        }
        Command::Partition {
            d,
            eps,
            c,
            p,
            delta,
            q,
        } => {
            let eps = if eps.len() == 1 { vec![eps[0]; d.len()] } else { eps.clone() };
            let image = match (delta, q) {
                (Some(delta), Some(q)) => Some((delta.as_slice(), *q)),
                _ => None,
            };
            Ok(Report::ok(to_value(&partition_indices(d, &eps, *c, *p, image)?)))
        }
        Command::ReduceVerify {
            instance,
            samples,
            seed,
        } => {
            let (inst, pairs) = ReductionInstance::load(instance)?;
            let clauses = inst.clause_report();
            let mut choices: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
            if let Some(pairs) = pairs {
                if pairs.x.len() != pairs.y.len() {
                    return Err(Error::Shape("pairs.x and pairs.y differ in length".into()));
                }
                for (x, y) in pairs.x.iter().zip(&pairs.y) {
                    choices.push((inst.choice_from_labels(x)?, inst.choice_from_labels(y)?));
                }
            }
            if *samples > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.get()?);
                for _ in 0..*samples {
                    let x = random_choice(&inst, &mut rng);
                    let y = random_choice(&inst, &mut rng);
                    choices.push((x, y));
                }
            }
            let mut reports = Vec::with_capacity(choices.len());
            let mut table = vec![["pair", "name", "relation", "lhs", "rhs", "pass", "slack"]
                .map(String::from)
                .to_vec()];
            let mut failures = 0;
            let mut flat = Vec::new();
            for (i, (x, y)) in choices.iter().enumerate() {
                let r = verify_reduction_bounds(&inst, x, y)?;
                failures += r.inequalities.iter().filter(|q| !q.pass).count();
                for q in &r.inequalities {
                    let mut row = to_value(q);
                    row["pair"] = json!(i);
                    flat.push(row);
                    table.push(vec![
                        i.to_string(),
                        q.name.to_string(),
                        to_value(&q.relation).as_str().unwrap_or_default().to_string(),
                        format_g17(q.lhs),
                        format_g17(q.rhs),
                        q.pass.to_string(),
                        format_g17(q.slack),
                    ]);
                }
                let label = |c: &[usize]| -> Vec<String> {
                    c.iter()
                        .zip(&inst.levels)
                        .map(|(&u, l)| l.space.label(u).to_string())
                        .collect()
                };
                let mut body = to_value(&r);
                body["x"] = json!(label(x));
                body["y"] = json!(label(y));
                reports.push(body);
            }
            let passed = clauses.passed() && failures == 0 && reports.iter().all(|r| r["passed"] == json!(true));
            let body = json!({
                "constants": inst.constants,
                "clauses": clauses,
                "pairs": reports,
                "inequalities": flat,
                "inequality_failures": failures,
                "passed": passed,
            });
            Ok(Report::ok(body).with_table(table).finding_if(!passed))
        }
        Command::DenseSnap { metrics, x, p } => {
            let loaded = metrics
                .iter()
                .map(|path| Loaded::new(path, kz))
                .collect::<Result<Vec<_>>>()?;
            if x.len() != loaded.len() {
                return Err(Error::Shape(format!(
                    "{} levels but {} labels",
                    loaded.len(),
                    x.len()
                )));
            }
            let idx = loaded
                .iter()
                .zip(x)
                .map(|(m, l)| m.index(l))
                .collect::<Result<Vec<_>>>()?;
            let spaces: Vec<FiniteMetricSpace> = loaded.iter().map(|m| m.space.clone()).collect();
            let nets = dense_nets(&spaces)?;
            match dense_snap(&spaces, &nets, &idx, *p) {
                Err(e) if e.is_domain() => Ok(Report::ok(finding_body(&e, None)).finding_if(true)),
                Err(e) => Err(e),
                Ok(r) => {
                    let mut body = to_value(&r);
                    body["snapped"] = json!(r
                        .snapped
                        .iter()
                        .zip(&spaces)
                        .map(|(&s, m)| m.label(s).to_string())
                        .collect::<Vec<_>>());
                    Ok(Report::ok(body))
                }
            }
        }
        Command::Classify { model, p } => {
            let text = if model.trim_start().starts_with('{') {
                model.clone()
            } else {
                std::fs::read_to_string(model)?
            };
            let model: TailModel = serde_json::from_str(&text)?;
            let class = classify_tail(&model, *p)?;
            Ok(Report::ok(json!({"model": model, "p": p, "class": class})))
        }
        Command::Simulate {
            instance,
            models,
            prefix,
            samples,
            tau,
            seed,
        } => {
            let (inst, _) = ReductionInstance::load(instance)?;
            let models: Vec<TailModel> = read_json(models)?;
            let opts = SimulateOptions {
                prefix: *prefix,
                samples: *samples,
                seed: seed.get()?,
                tau: *tau,
            };
            let r = simulate(&inst, &models, &opts)?;
            let agree = r.models.iter().all(|m| m.agreement_rate == 1.0);
            Ok(Report::ok(to_value(&r)).finding_if(!agree))
        }
    }
}

fn emit(cli: &Cli, report: &Report) -> Result<()> {
    let bytes = if cli.csv {
        match &report.table {
            Some(t) => to_csv_bytes(t)?,
            None => {
                return Err(Error::InvalidArgument(
                    "--csv is only available for distance matrices and inequality tables".into(),
                ))
            }
        }
    } else {
        to_json_bytes(&report.body)?
    };
    match &cli.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli).and_then(|r| emit(&cli, &r).map(|()| r.finding)) {
        Ok(false) => EXIT_OK,
        Ok(true) => EXIT_FINDING,
        Err(e) => {
            eprintln!("lpred: {e}");
            if e.is_domain() {
                EXIT_FINDING
            } else {
                EXIT_INPUT
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g17_matches_printf() {
        assert_eq!(format_g17(0.1), "0.10000000000000001");
        assert_eq!(format_g17(4.0), "4");
        assert_eq!(format_g17(-2.5), "-2.5");
        assert_eq!(format_g17(1e-7), "9.9999999999999995e-08");
        assert_eq!(format_g17(1e20), "1e+20");
        assert_eq!(format_g17(123456.0), "123456");
        assert_eq!(format_g17(0.0), "0");
    }

    #[test]
    fn g17_round_trips() {
        for v in [0.1, 1.0 / 3.0, 2f64.sqrt(), 1e-300, 6.02e23, -7.25e-6] {
            assert_eq!(format_g17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_uses_precise_floats() {
        let text = String::from_utf8(to_json_bytes(&json!({"x": 0.1, "n": 3})).unwrap()).unwrap();
        assert!(text.contains("\"x\": 0.10000000000000001"), "{text}");
        assert!(text.contains("\"n\": 3"));
    }

    #[test]
    fn bad_arguments_exit_two() {
        assert_eq!(run(["lpred", "no-such-command"]), EXIT_INPUT);
        assert_eq!(run(["lpred", "validate", "/nonexistent/metric.json"]), EXIT_INPUT);
        assert_eq!(run(["lpred", "pairfn", "--n", "3"]), EXIT_INPUT);
    }
}
