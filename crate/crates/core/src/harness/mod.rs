//! Differential checking of rewrite traces: plug the original and the
//! rewritten term into sampled closing contexts, run both, and compare what
//! can be observed. Sampling can refute correctness, never prove it.

mod context;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::{eval, EvalError, Observation};
use crate::rewrite::{apply_trace, format_trace, RewriteStep, RuleFamily, TraceError};
use crate::safety::SafetyMode;
use crate::term::{print_term, Term, VarSet};
use crate::values::ValuePool;

pub use context::{sample_context, Context, ContextSpec, Frame, HOLE};

/// Thin wrapper over evaluation under the observable alphabet.
pub fn observe(e: &Term, fuel: u64) -> Result<Observation, EvalError> {
    eval(e, fuel)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Mixed,
    Integers,
}

impl PoolKind {
    pub fn pool(self) -> ValuePool {
        match self {
            PoolKind::Mixed => ValuePool::mixed(),
            PoolKind::Integers => ValuePool::integers(),
        }
    }
}

/// Everything that determines a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub fuel: u64,
    pub num_contexts: usize,
    pub seed: u64,
    pub safety: SafetyMode,
    pub pool: PoolKind,
    /// Also compare runs where the original reaches `unreachable`. Applied
    /// automatically to traces made only of P and M steps.
    pub unconditional: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            fuel: 10_000,
            num_contexts: 20,
            seed: 0,
            safety: SafetyMode::Syntactic,
            pool: PoolKind::Mixed,
            unconditional: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Agree,
    /// The original program reaches `unreachable`, so anything goes.
    VacuousUndef,
    Disagree,
    /// A run hit the fuel limit.
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Agree => "agree",
            Verdict::VacuousUndef => "vacuous-undef",
            Verdict::Disagree => "disagree",
            Verdict::Unknown => "unknown",
        })
    }
}

/// Compare the observations of a program before and after rewriting.
pub fn judge(before: &Observation, after: &Observation, unconditional: bool) -> Verdict {
    match (before, after) {
        (Observation::UndefHit, _) if !unconditional => Verdict::VacuousUndef,
        (Observation::Timeout(_), _) | (_, Observation::Timeout(_)) => Verdict::Unknown,
        (Observation::UndefHit, Observation::UndefHit) => Verdict::VacuousUndef,
        (a, b) if a == b => Verdict::Agree,
        _ => Verdict::Disagree,
    }
}

/// Everything needed to replay a disagreement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub term: String,
    pub rewritten: String,
    pub trace: String,
    pub context: String,
    pub before_program: String,
    pub after_program: String,
    pub fuel: u64,
    pub seed: u64,
}

/// One line of the machine-readable report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case: usize,
    pub context: String,
    pub before: String,
    pub after: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bundle: Option<Bundle>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub agree: usize,
    pub vacuous_undef: usize,
    pub disagree: usize,
    pub unknown: usize,
}

impl Counts {
    pub fn add(&mut self, v: Verdict) {
        match v {
            Verdict::Agree => self.agree += 1,
            Verdict::VacuousUndef => self.vacuous_undef += 1,
            Verdict::Disagree => self.disagree += 1,
            Verdict::Unknown => self.unknown += 1,
        }
    }

    pub fn merge(&mut self, other: &Counts) {
        self.agree += other.agree;
        self.vacuous_undef += other.vacuous_undef;
        self.disagree += other.disagree;
        self.unknown += other.unknown;
    }

    pub fn total(&self) -> usize {
        self.agree + self.vacuous_undef + self.disagree + self.unknown
    }
}

impl fmt::Display for Counts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} cases: {} agree, {} vacuous-undef, {} disagree, {} unknown",
            self.total(),
            self.agree,
            self.vacuous_undef,
            self.disagree,
            self.unknown
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarnessReport {
    pub cases: Vec<CaseRecord>,
    pub counts: Counts,
}

impl HarnessReport {
    pub fn push(&mut self, rec: CaseRecord) {
        self.counts.add(rec.verdict);
        self.cases.push(rec);
    }

    pub fn disagreements(&self) -> impl Iterator<Item = &CaseRecord> {
        self.cases.iter().filter(|c| c.verdict == Verdict::Disagree)
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        self.cases
            .iter()
            .map(|c| serde_json::to_string(c).expect("serializable") + "\n")
            .collect()
    }

    pub fn summary(&self) -> String {
        self.counts.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HarnessError {
    #[error("trace does not replay: {0}")]
    Replay(#[from] TraceError),
    #[error("term is not closed by its context: {0}")]
    Open(#[from] EvalError),
}

/// Whether a trace uses only rules whose soundness needs no undefinedness
/// guard.
pub fn is_unconditional(trace: &[RewriteStep]) -> bool {
    trace.iter().all(|s| s.rule.family() != RuleFamily::Undefined)
}

/// Replay `trace` on `e`, then compare both under sampled contexts closing
/// `delta`.
pub fn check_correctness(
    e: &Term,
    delta: &VarSet,
    trace: &[RewriteStep],
    config: &HarnessConfig,
) -> Result<HarnessReport, HarnessError> {
    let rewritten = apply_trace(e, trace, config.safety)?;
    let unconditional = config.unconditional || is_unconditional(trace);
    check_pair_with(e, &rewritten, delta, &format_trace(trace), unconditional, config)
}

/// Compare two arbitrary terms (raw pair mode).
pub fn check_pair(
    before: &Term,
    after: &Term,
    delta: &VarSet,
    config: &HarnessConfig,
) -> Result<HarnessReport, HarnessError> {
    check_pair_with(before, after, delta, "", config.unconditional, config)
}

fn check_pair_with(
    before: &Term,
    after: &Term,
    delta: &VarSet,
    trace_text: &str,
    unconditional: bool,
    config: &HarnessConfig,
) -> Result<HarnessReport, HarnessError> {
    let spec = ContextSpec::new(config.pool.pool());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let contexts: Vec<Context> = (0..config.num_contexts)
        .map(|_| sample_context(delta, &spec, &mut rng))
        .collect();
    let mut report = HarnessReport::default();
    for (case, ctx) in contexts.iter().enumerate() {
        let rec = run_case(case, before, after, ctx, trace_text, unconditional, config)?;
        report.push(rec);
    }
    Ok(report)
}

/// Compare under explicitly chosen contexts.
pub fn check_in_contexts(
    before: &Term,
    after: &Term,
    contexts: &[Context],
    unconditional: bool,
    config: &HarnessConfig,
) -> Result<HarnessReport, HarnessError> {
    let mut report = HarnessReport::default();
    for (case, ctx) in contexts.iter().enumerate() {
        report.push(run_case(case, before, after, ctx, "", unconditional, config)?);
    }
    Ok(report)
}

fn run_case(
    case: usize,
    before: &Term,
    after: &Term,
    ctx: &Context,
    trace_text: &str,
    unconditional: bool,
    config: &HarnessConfig,
) -> Result<CaseRecord, HarnessError> {
    let p1 = ctx.plug(before);
    let p2 = ctx.plug(after);
    let o1 = observe(&p1, config.fuel)?;
    let o2 = observe(&p2, config.fuel)?;
    let verdict = judge(&o1, &o2, unconditional);
    let bundle = (verdict == Verdict::Disagree).then(|| Bundle {
        term: print_term(before),
        rewritten: print_term(after),
        trace: trace_text.to_string(),
        context: ctx.to_text(),
        before_program: print_term(&p1),
        after_program: print_term(&p2),
        fuel: config.fuel,
        seed: config.seed,
    });
    Ok(CaseRecord {
        case,
        context: ctx.to_text(),
        before: o1.to_string(),
        after: o2.to_string(),
        verdict,
        bundle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{RewriteStep, RuleId};
    use crate::term::{parse_term, Const, ErrLabel, Name};

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn observe_examples() {
        assert_eq!(observe(&Term::int(3), 10).unwrap(), Observation::Value(Const::int(3)));
        assert_eq!(
            observe(&t("(lambda (x) (unreachable))"), 10).unwrap(),
            Observation::Function
        );
        assert_eq!(
            observe(&t("(err beta)"), 10).unwrap(),
            Observation::ErrK(ErrLabel::beta())
        );
    }

    #[test]
    fn judge_table() {
        let v = |i| Observation::Value(Const::int(i));
        assert_eq!(judge(&v(1), &v(1), false), Verdict::Agree);
        assert_eq!(judge(&v(1), &v(2), false), Verdict::Disagree);
        assert_eq!(judge(&Observation::UndefHit, &v(2), false), Verdict::VacuousUndef);
        assert_eq!(judge(&Observation::UndefHit, &v(2), true), Verdict::Disagree);
        assert_eq!(
            judge(&Observation::UndefHit, &Observation::UndefHit, true),
            Verdict::VacuousUndef
        );
        assert_eq!(judge(&v(1), &Observation::Timeout(5), false), Verdict::Unknown);
        assert_eq!(
            judge(&Observation::Function, &Observation::Function, false),
            Verdict::Agree
        );
    }

    #[test]
    fn identity_trace_agrees() {
        let e = t("(+ x 1)");
        let delta: VarSet = [Name::new("x")].into_iter().collect();
        let report = check_correctness(&e, &delta, &[], &HarnessConfig::default()).unwrap();
        assert_eq!(report.counts.disagree, 0);
        assert_eq!(report.counts.total(), 20);
    }

    #[test]
    fn wrong_rewrite_is_caught() {
        let delta: VarSet = [Name::new("x")].into_iter().collect();
        let cfg = HarnessConfig {
            num_contexts: 200,
            ..HarnessConfig::default()
        };
        let report = check_pair(&t("(if x 1 2)"), &Term::int(1), &delta, &cfg).unwrap();
        assert!(report.counts.disagree > 0);
        let bad = report.disagreements().next().unwrap();
        let bundle = bad.bundle.as_ref().unwrap();
        // The bundle replays.
        let before = observe(&t(&bundle.before_program), cfg.fuel).unwrap();
        let after = observe(&t(&bundle.after_program), cfg.fuel).unwrap();
        assert_ne!(before, after);
    }

    #[test]
    fn reports_are_reproducible() {
        let delta: VarSet = [Name::new("p")].into_iter().collect();
        let e = t("(if (p 1) (unreachable) 3)");
        let trace = vec![RewriteStep::fwd(RuleId::U2, vec![])];
        let cfg = HarnessConfig::default();
        let a = check_correctness(&e, &delta, &trace, &cfg).unwrap();
        let b = check_correctness(&e, &delta, &trace, &cfg).unwrap();
        assert_eq!(a.to_json_lines(), b.to_json_lines());
        assert_eq!(a.counts.disagree, 0);
        assert!(a.counts.vacuous_undef > 0);
        for line in a.to_json_lines().lines() {
            let rec: CaseRecord = serde_json::from_str(line).unwrap();
            assert!(rec.bundle.is_none());
        }
    }

    #[test]
    fn replay_failure_is_an_error() {
        let trace = vec![RewriteStep::fwd(RuleId::U1, vec![])];
        let err = check_correctness(&Term::int(1), &VarSet::new(), &trace, &HarnessConfig::default());
        assert!(matches!(err, Err(HarnessError::Replay(_))));
    }
}
