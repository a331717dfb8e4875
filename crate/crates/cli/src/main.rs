use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use msel_core::format::{
    q_value, rows_value, vec_value, Instance, InstanceFile, NodeRecord, ResultFile, FORMAT_VERSION,
};
use msel_core::generate::{generate, Profile};
use msel_core::kabanov::{
    arbitrage_certificate, check_nar, consistent_price_process, endowment_check,
    endowment_set_description, graph_meets, krs_condition_oracle, BidAskMarket, CertificateOutcome,
    SizeGuard,
};
use msel_core::pricing::{
    arbitrage_lp, check_na, price_bounds, superhedge_oracle, ConstrainedMarket, HedgeValue, Side,
};
use msel_core::selection::{backward_recursion, solve, verify_selector, SelectionProblem};
use msel_core::tree::{NodeMap, ScenarioTree};
use msel_core::{Error, Rational};

#[derive(Parser)]
#[command(
    name = "msel",
    version,
    about = "Exact martingale selection on scenario trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Input instance (JSON).
    #[arg(long = "in", global = true)]
    input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Seed for `gen`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Instance family for `gen`.
    #[arg(long, global = true, default_value = "selection")]
    profile: Profile,
    /// Largest tree (in nodes) for the transaction-cost LP cross-check in `nar`.
    #[arg(long = "size-guard", global = true)]
    size_guard: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Backward recursion only: is the selection problem solvable?
    Check,
    /// Selector, density and measure change, with verification.
    Select,
    /// Arbitrage-free price bounds of the claim at every node.
    Price,
    /// No-arbitrage check for a constrained market.
    Na,
    /// Whole-tree super- and subhedging LPs.
    Oracle,
    /// Robust no-arbitrage for a bid-ask market.
    Nar,
    /// Strictly consistent price process.
    Ccp,
    /// Endowment check for `zeta0` against `zetaT`.
    Endow,
    /// Random instance for the chosen profile and seed.
    Gen,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Select => "select",
            Command::Price => "price",
            Command::Na => "na",
            Command::Oracle => "oracle",
            Command::Nar => "nar",
            Command::Ccp => "ccp",
            Command::Endow => "endow",
            Command::Gen => "gen",
        }
    }
}

/// Outcome of a computation: affirmative (exit 0) or negative (exit 1).
struct Answer {
    affirmative: bool,
    status: &'static str,
    fields: BTreeMap<String, Value>,
    nodes: BTreeMap<usize, BTreeMap<String, Value>>,
}

impl Answer {
    fn new(affirmative: bool, status: &'static str) -> Self {
        Answer {
            affirmative,
            status,
            fields: BTreeMap::new(),
            nodes: BTreeMap::new(),
        }
    }

    fn global(&mut self, k: &str, v: Value) {
        self.fields.insert(k.to_string(), v);
    }

    fn node(&mut self, n: usize, k: &str, v: Value) {
        self.nodes.entry(n).or_default().insert(k.to_string(), v);
    }
}

fn code(e: &Error) -> u8 {
    match e {
        Error::Internal(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("msel: {e}");
            ExitCode::from(code(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Error> {
    if cli.command == Command::Gen {
        let text = generate(cli.seed, cli.profile).print();
        emit(cli, &text)?;
        return Ok(0);
    }
    let path = cli
        .input
        .as_ref()
        .ok_or_else(|| Error::invalid("--in is required"))?;
    let bytes = fs::read(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|_| Error::invalid("input is not UTF-8"))?;
    let file = InstanceFile::parse(&text)?;
    let instance = file.to_instance()?;
    let (tree, answer) = dispatch(cli, instance)?;
    let result = ResultFile {
        version: FORMAT_VERSION,
        tool: format!("msel {}", env!("CARGO_PKG_VERSION")),
        command: cli.command.name().to_string(),
        input_sha256: digest,
        status: answer.status.to_string(),
        fields: answer.fields,
        nodes: answer
            .nodes
            .into_iter()
            .map(|(n, fields)| NodeRecord {
                id: tree.id(n).to_string(),
                fields,
            })
            .collect(),
    };
    let out = match cli.format {
        OutFormat::Json => result.print(),
        OutFormat::Csv => csv_text(&result)?,
    };
    emit(cli, &out)?;
    Ok(if answer.affirmative { 0 } else { 1 })
}

fn csv_text(r: &ResultFile) -> Result<String, Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::internal(format!("csv: {e}"));
    w.write_record(["node_id", "field", "value"]).map_err(io)?;
    for (n, f, v) in r.triples() {
        w.write_record([n, f, v]).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::internal(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|_| Error::internal("csv output is not UTF-8"))
}

fn emit(cli: &Cli, text: &str) -> Result<(), Error> {
    match &cli.out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Error::invalid(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::internal(format!("stdout: {e}"))),
    }
}

fn wrong_kind(cmd: Command, want: &str) -> Error {
    Error::invalid(format!("`{}` needs a {want} instance", cmd.name()))
}

fn dispatch(cli: &Cli, instance: Instance) -> Result<(ScenarioTree, Answer), Error> {
    let cmd = cli.command;
    match (cmd, instance) {
        (Command::Check | Command::Select, Instance::Selection(p)) => {
            let a = if cmd == Command::Check {
                check(&p)?
            } else {
                select(&p)?
            };
            Ok((p.tree().clone(), a))
        }
        (Command::Check | Command::Select, _) => Err(wrong_kind(cmd, "selection")),
        (Command::Price | Command::Na | Command::Oracle, Instance::Market(m)) => {
            let a = match cmd {
                Command::Price => price(&m)?,
                Command::Na => na(&m)?,
                _ => oracle(&m)?,
            };
            Ok((m.tree().clone(), a))
        }
        (Command::Price | Command::Na | Command::Oracle, _) => Err(wrong_kind(cmd, "market")),
        (
            Command::Nar | Command::Ccp | Command::Endow,
            Instance::BidAsk {
                market,
                zeta0,
                zeta_t,
            },
        ) => {
            let a = match cmd {
                Command::Nar => nar(&market, cli.size_guard)?,
                Command::Ccp => ccp(&market)?,
                _ => endow(&market, zeta0, zeta_t)?,
            };
            Ok((market.tree().clone(), a))
        }
        (Command::Nar | Command::Ccp | Command::Endow, _) => Err(wrong_kind(cmd, "bidask")),
        (Command::Gen, _) => unreachable!("handled before parsing"),
    }
}

fn ids(tree: &ScenarioTree, nodes: &[usize]) -> Value {
    Value::Array(nodes.iter().map(|&n| json!(tree.id(n))).collect())
}

fn check(p: &SelectionProblem) -> Result<Answer, Error> {
    let rec = backward_recursion(p)?;
    let mut a = if rec.solvable() {
        Answer::new(true, "solvable")
    } else {
        Answer::new(false, "unsolvable")
    };
    a.global("failing", ids(p.tree(), &rec.failing));
    for (n, w) in rec.w.iter() {
        a.node(n, "W", rows_value(&w.faces));
        a.node(n, "W_empty", json!(w.is_empty()));
    }
    Ok(a)
}

fn select(p: &SelectionProblem) -> Result<Answer, Error> {
    let res = solve(p)?;
    if !res.solvable() {
        return check(p);
    }
    let report = verify_selector(&res, p);
    if !report.passed() {
        let msgs: Vec<String> = report.failures.iter().map(|f| f.detail.clone()).collect();
        return Err(Error::internal(format!(
            "selector failed verification: {}",
            msgs.join("; ")
        )));
    }
    let mut a = Answer::new(true, "solvable");
    a.global("verified", json!(true));
    for n in 0..p.tree().len() {
        a.node(n, "W", rows_value(res.w.get(n).unwrap()));
        a.node(n, "xi", vec_value(res.xi.get(n).unwrap()));
        a.node(n, "z", q_value(res.z.get(n).unwrap()));
        a.node(n, "q", q_value(res.q.get(n).unwrap()));
        if let Some(d) = res.delta.get(n) {
            a.node(n, "delta", q_value(d));
        }
    }
    Ok(a)
}

fn bound(v: &Option<Rational>, inf: &str) -> Value {
    match v {
        Some(r) => q_value(r),
        None => json!(inf),
    }
}

fn arbitrage_fields(a: &mut Answer, m: &ConstrainedMarket) {
    let na = match check_na(m) {
        Ok(na) => na,
        Err(_) => return,
    };
    a.global("failing", ids(m.tree(), &na.failing));
    if let Some(g) = arbitrage_lp(m) {
        for (n, v) in g.iter() {
            a.node(n, "arbitrage_gamma", vec_value(v));
        }
    }
}

fn price(m: &ConstrainedMarket) -> Result<Answer, Error> {
    let na = check_na(m)?;
    if !na.arbitrage_free {
        let mut a = Answer::new(false, "arbitrage");
        arbitrage_fields(&mut a, m);
        return Ok(a);
    }
    let bounds = price_bounds(m)?;
    let mut a = Answer::new(true, "priced");
    for (n, iv) in bounds.iter() {
        a.node(n, "lower", bound(&iv.lower, "-inf"));
        a.node(n, "upper", bound(&iv.upper, "+inf"));
        a.node(n, "lower_attained", json!(iv.lower_attained));
        a.node(n, "upper_attained", json!(iv.upper_attained));
    }
    Ok(a)
}

fn na(m: &ConstrainedMarket) -> Result<Answer, Error> {
    let na = check_na(m)?;
    let lp = arbitrage_lp(m);
    if na.arbitrage_free == lp.is_some() {
        return Err(Error::internal(
            "selection test and arbitrage LP disagree on no-arbitrage",
        ));
    }
    if na.arbitrage_free {
        Ok(Answer::new(true, "arbitrage-free"))
    } else {
        let mut a = Answer::new(false, "arbitrage");
        arbitrage_fields(&mut a, m);
        Ok(a)
    }
}

fn hedge_fields(a: &mut Answer, side: &str, h: &HedgeValue, inf: &str) {
    a.global(&format!("{side}_value"), bound(&h.value, inf));
    if let Some(c) = &h.cert {
        for (n, g) in c.gamma.iter() {
            a.node(n, &format!("{side}_gamma"), vec_value(g));
        }
    }
}

fn oracle(m: &ConstrainedMarket) -> Result<Answer, Error> {
    let sup = superhedge_oracle(m, Side::Super)?;
    let sub = superhedge_oracle(m, Side::Sub)?;
    let mut a = Answer::new(true, "computed");
    let sup_inf = if sup.unbounded { "-inf" } else { "+inf" };
    let sub_inf = if sub.unbounded { "+inf" } else { "-inf" };
    hedge_fields(&mut a, "super", &sup, sup_inf);
    hedge_fields(&mut a, "sub", &sub, sub_inf);
    Ok(a)
}

fn nar(m: &BidAskMarket, guard: Option<usize>) -> Result<Answer, Error> {
    let rep = check_nar(m)?;
    let mut a = if rep.nar {
        Answer::new(true, "nar")
    } else {
        Answer::new(false, "no-nar")
    };
    a.global("failing", ids(m.tree(), &rep.failing));
    for (n, w) in rep.w.iter() {
        a.node(n, "W", rows_value(w));
    }
    let mut g = SizeGuard::default();
    if let Some(k) = guard {
        g.max_nodes = k;
    }
    match krs_condition_oracle(m, g) {
        Ok(v) => {
            if v != rep.nar {
                return Err(Error::internal("recursion and decomposition LP disagree"));
            }
            a.global("krs", json!(v));
        }
        Err(Error::SizeGuard(_)) => a.global("krs", json!("skipped")),
        Err(e) => return Err(e),
    }
    if !rep.nar {
        match arbitrage_certificate(m)? {
            CertificateOutcome::Found(c) => {
                a.global("certificate", json!("verified"));
                a.global("failing_node", json!(m.tree().id(c.node)));
                a.global("separating", vec_value(&c.separating));
                if let Some(d) = c.m {
                    a.global("m", json!(d.to_string()));
                }
                a.global("eps", vec_value(&c.eps));
                for n in 0..m.tree().len() {
                    a.node(n, "theta", vec_value(c.theta.get(n).unwrap()));
                    a.node(n, "x", vec_value(c.x.get(n).unwrap()));
                }
            }
            CertificateOutcome::Failed { node, separating } => {
                a.global("certificate", json!("certificate construction failed"));
                a.global("failing_node", json!(m.tree().id(node)));
                a.global("separating", vec_value(&separating));
            }
        }
    }
    Ok(a)
}

fn ccp(m: &BidAskMarket) -> Result<Answer, Error> {
    match consistent_price_process(m) {
        Ok(c) => {
            let mut a = Answer::new(true, "consistent");
            for n in 0..m.tree().len() {
                a.node(n, "Z", vec_value(c.z_process.get(n).unwrap()));
                a.node(n, "density", q_value(c.density.get(n).unwrap()));
            }
            Ok(a)
        }
        Err(Error::Precondition(msg)) => {
            let mut a = Answer::new(false, "no-nar");
            a.global("message", json!(msg));
            Ok(a)
        }
        Err(e) => Err(e),
    }
}

fn endow(
    m: &BidAskMarket,
    zeta0: Option<Vec<Rational>>,
    zeta_t: Option<NodeMap<Vec<Rational>>>,
) -> Result<Answer, Error> {
    let zeta0 = zeta0.ok_or_else(|| Error::invalid("`endow` needs zeta0"))?;
    let zeta_t = zeta_t.ok_or_else(|| Error::invalid("`endow` needs zetaT"))?;
    let rep = match endowment_check(m, &zeta0, &zeta_t) {
        Ok(r) => r,
        Err(Error::Precondition(msg)) => {
            let mut a = Answer::new(false, "no-nar");
            a.global("message", json!(msg));
            return Ok(a);
        }
        Err(e) => return Err(e),
    };
    let set = endowment_set_description(m, &zeta_t)?;
    if graph_meets(m, &set, &zeta0) != rep.ok {
        return Err(Error::internal(
            "endowment set and endowment check disagree",
        ));
    }
    let mut a = if rep.ok {
        Answer::new(true, "ok")
    } else {
        Answer::new(false, "not-ok")
    };
    a.global("ri_W0", rows_value(&set));
    if let Some(c) = rep.process {
        for n in 0..m.tree().len() {
            a.node(n, "Z", vec_value(c.z_process.get(n).unwrap()));
        }
    }
    Ok(a)
}
