//! One function per subcommand; each returns a JSON result and, where it
//! makes sense, a CSV rendering.

use nonlocality_core::chains::{
    check_nonvanishing, closure_forces_complement, closure_sweep, verify_chain, verify_closure, ChainFamily,
};
use nonlocality_core::correlation::{check, probability};
use nonlocality_core::hardy::{
    build_hardy, log_grid, max_hardy_probability, schmidt_state, sensitivity, HardyConfig, OptimizerConfig,
};
use nonlocality_core::reality::{
    derive_contradiction, exclusion_probability, ghsz_correlations, lhv_search, propagate, refute_seed,
    ConstraintSystem, Literal, Propagation, RealityLedger, MAX_LHV_OBSERVABLES,
};
use nonlocality_core::{CMatrix, Direction, LabError, StateVector};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::schema::{chain_from_dto, ConstraintSetDto, DirectionDto, ObservableDto, StateDto};
use crate::{read_input, Cli, CliError, Command, Family};

/// Upper bound on `--k` for closed-chain sweeps.
pub const MAX_CLOSURE_K: usize = 64;

pub struct CommandResult {
    pub json: Value,
    pub csv: Option<String>,
}

impl CommandResult {
    fn json(json: Value) -> Self {
        Self { json, csv: None }
    }
}

pub fn execute(cli: &Cli) -> Result<CommandResult, CliError> {
    match &cli.command {
        Command::Hardy { lambda, theta, phi } => hardy(cli, *lambda, *theta, *phi),
        Command::HardyOptimize { starts } => hardy_optimize(cli, *starts),
        Command::Sensitivity { lambda, theta, phi, eps_min, eps_max, points } => {
            sensitivity_cmd(cli, (*lambda, *theta, *phi), (*eps_min, *eps_max, *points))
        }
        Command::ChainVerify => chain_verify(cli),
        Command::Prop2Check { k, trials, family } => closure_check(cli, *k, *trials, *family),
        Command::Ghsz => ghsz(),
        Command::LhvClosure => lhv_closure(cli),
    }
}

fn to_json<T: serde::Serialize + ?Sized>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Internal(e.to_string()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HardyInput {
    state: StateDto,
    direction: DirectionDto,
    #[serde(default)]
    epsilons: Option<Vec<f64>>,
}

/// State and `n₁` from `--input`, else a Schmidt state from the flags.
fn hardy_setup(cli: &Cli, lambda: f64, theta: f64, phi: f64) -> Result<(StateVector, Direction, Option<Vec<f64>>), CliError> {
    match read_input::<HardyInput>(cli)? {
        Some(input) => Ok((input.state.to_state()?, input.direction.to_direction()?, input.epsilons)),
        None => Ok((schmidt_state(lambda)?, Direction::new(theta, phi)?, None)),
    }
}

fn hardy_json(cfg: &HardyConfig) -> Result<Value, CliError> {
    let residuals = cfg
        .correlations()
        .iter()
        .map(|c| check(c, cfg.psi()).map(|r| r.vector_residual))
        .collect::<Result<Vec<_>, _>>()?;
    let obs = cfg.observables();
    let either = |o: &nonlocality_core::LocalObservable, v: bool| if v { o.clone() } else { o.complement() };
    // joint outcome probabilities of (S₁(n₁), S₂(n₄))
    let mut joint = serde_json::Map::new();
    for (a, b) in [(true, true), (true, false), (false, true), (false, false)] {
        let m: CMatrix = either(&obs[0], a).matrix().matmul(either(&obs[3], b).matrix())?;
        joint.insert(format!("{}{}", u8::from(a), u8::from(b)), json!(probability(&m, cfg.psi())?));
    }
    Ok(json!({
        "state": StateDto::from_state(cfg.psi()),
        "directions": cfg.directions().iter().map(DirectionDto::from_direction).collect::<Vec<_>>(),
        "p_violation": cfg.p_violation(),
        "nondegenerate": cfg.is_nondegenerate(),
        "parallel_pairs": cfg.parallel_pairs(),
        "correlation_residuals": residuals,
        "joint_probabilities_n1_n4": joint,
    }))
}

fn hardy(cli: &Cli, lambda: f64, theta: f64, phi: f64) -> Result<CommandResult, CliError> {
    let (psi, n1, _) = hardy_setup(cli, lambda, theta, phi)?;
    let cfg = build_hardy(&psi, n1)?;
    Ok(CommandResult::json(hardy_json(&cfg)?))
}

fn hardy_optimize(cli: &Cli, starts: usize) -> Result<CommandResult, CliError> {
    if starts == 0 {
        return Err(CliError::Validation("--starts must be at least 1".into()));
    }
    let opt = max_hardy_probability(&OptimizerConfig { starts, seed: cli.seed, ..Default::default() });
    Ok(CommandResult::json(json!({
        "p_max": opt.p_max,
        "lambda": opt.lambda,
        "theta": opt.n1.theta(),
        "phi": opt.n1.phi(),
        "converged": opt.converged,
        "starts": opt.starts,
        "state": StateDto::from_state(&opt.psi),
    })))
}

fn sensitivity_cmd(
    cli: &Cli,
    (lambda, theta, phi): (f64, f64, f64),
    (eps_min, eps_max, points): (f64, f64, usize),
) -> Result<CommandResult, CliError> {
    let (psi, n1, given) = hardy_setup(cli, lambda, theta, phi)?;
    let eps = match given {
        Some(e) => e,
        None => {
            if !(eps_min > 0.0 && eps_max > eps_min && eps_max.is_finite() && points >= 2) {
                return Err(CliError::Validation(
                    "need 0 < --eps-min < --eps-max and --points ≥ 2".into(),
                ));
            }
            log_grid(eps_min, eps_max, points)
        }
    };
    let cfg = build_hardy(&psi, n1)?;
    let r = sensitivity(&cfg, &eps)?;
    let mut csv = String::from("epsilon,leak_probability\n");
    for (e, p) in r.epsilons.iter().zip(&r.leak_probabilities) {
        csv.push_str(&format!("{e},{p}\n"));
    }
    let mut json = json!({
        "epsilons": r.epsilons,
        "leak_probabilities": r.leak_probabilities,
        "fit_window": [r.fit_window.0, r.fit_window.1],
        "p_violation": cfg.p_violation(),
    });
    // fewer than two points inside the window leaves no slope to report
    if r.fitted_exponent.is_finite() {
        json["fitted_exponent"] = json!(r.fitted_exponent);
    }
    Ok(CommandResult { json, csv: Some(csv) })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainInput {
    state: StateDto,
    chain: Vec<ObservableDto>,
    #[serde(default)]
    k: Option<usize>,
}

fn chain_verify(cli: &Cli) -> Result<CommandResult, CliError> {
    let input: ChainInput =
        read_input(cli)?.ok_or_else(|| CliError::Validation("chain-verify needs --input {state, chain}".into()))?;
    let psi = input.state.to_state()?;
    let chain = chain_from_dto(&input.chain)?;
    let residuals = chain
        .links()
        .iter()
        .map(|c| check(c, &psi).map(|r| r.vector_residual))
        .collect::<Result<Vec<_>, _>>()?;
    let holds = verify_chain(&chain, &psi, cli.tol)?;
    let mut out = json!({
        "length": chain.len(),
        "holds": holds,
        "link_residuals": residuals,
    });
    match check_nonvanishing(&chain, &psi, cli.tol) {
        Ok(b) => out["nonvanishing"] = json!(b),
        Err(LabError::Precondition(msg)) => out["nonvanishing_skipped"] = json!(msg),
        Err(e) => return Err(e.into()),
    }
    if let Some(k) = input.k {
        out["closure"] = to_json(&verify_closure(&chain, k, cli.tol)?)?;
        out["closure_in_state"] = to_json(&closure_forces_complement(&chain, &psi, k, cli.tol)?)?;
    }
    Ok(CommandResult::json(out))
}

fn closure_check(cli: &Cli, k: usize, trials: usize, family: Family) -> Result<CommandResult, CliError> {
    if k == 0 || k > MAX_CLOSURE_K {
        return Err(CliError::Validation(format!("--k must be in 1..={MAX_CLOSURE_K}")));
    }
    if trials == 0 {
        return Err(CliError::Validation("--trials must be at least 1".into()));
    }
    let families = match family {
        Family::Generic => vec![ChainFamily::Generic],
        Family::Admissible => vec![ChainFamily::AdmissibleProduct],
        Family::Both => vec![ChainFamily::Generic, ChainFamily::AdmissibleProduct],
    };
    let mut reports = Vec::new();
    let mut max_residual: f64 = 0.0;
    let mut all_annihilated = true;
    for f in families {
        let s = closure_sweep(k, trials, cli.seed, cli.tol, f)?;
        max_residual = max_residual.max(s.max_head_norm);
        all_annihilated &= s.all_annihilated();
        reports.push(to_json(&s)?);
    }
    // one generic chain in full, for the cascade of forced identities
    let mut rng = nonlocality_core::random::trial_rng(cli.seed, u64::MAX);
    let (_, chain) = nonlocality_core::chains::random_closed_chain(&mut rng, k, ChainFamily::Generic);
    let example = verify_closure(&chain, k, cli.tol)?;
    Ok(CommandResult::json(json!({
        "k": k,
        "trials": trials,
        "max_residual": max_residual,
        "all_annihilated": all_annihilated,
        "families": reports,
        "example": example,
    })))
}

fn ghsz() -> Result<CommandResult, CliError> {
    let g = ghsz_correlations()?;
    let system = g.system();
    let max_p = g
        .exclusions
        .iter()
        .map(|e| exclusion_probability(&g.state, &g.observables, e))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let models = lhv_search(&system)?;
    let contradiction = derive_contradiction(&system, 0)
        .ok_or_else(|| CliError::Internal("no contradiction derived for the GHZ constraints".into()))?;
    contradiction.replay(&system)?;
    Ok(CommandResult::json(json!({
        "n_observables": g.observables.len(),
        "observables": g.observables.iter().map(ObservableDto::from_observable).collect::<Result<Vec<_>, _>>()?,
        "n_constraints": g.exclusions.len(),
        "max_constraint_probability": max_p,
        "lhv_models": models.len(),
        "contradiction": contradiction,
        "trace_replays": true,
    })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedDto {
    observable: usize,
    value: u8,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClosureInput {
    constraints: ConstraintSetDto,
    #[serde(default)]
    state: Option<StateDto>,
    #[serde(default)]
    seed: Option<SeedDto>,
}

/// Hardy's correlations at the CLI defaults, seeded with `S₁(n₁) = 1`.
fn default_closure_input() -> Result<ClosureInput, CliError> {
    let psi = schmidt_state(0.8)?;
    let cfg = build_hardy(&psi, Direction::new(1.1, 0.7)?)?;
    let mut set = nonlocality_core::chains::CorrelationSet::new();
    for c in cfg.correlations() {
        set.add_correlation(&c)?;
    }
    Ok(ClosureInput {
        constraints: ConstraintSetDto::from_set(&set)?,
        state: Some(StateDto::from_state(&psi)),
        seed: Some(SeedDto { observable: 0, value: 1 }),
    })
}

fn lhv_closure(cli: &Cli) -> Result<CommandResult, CliError> {
    let input = match read_input::<ClosureInput>(cli)? {
        Some(i) => i,
        None => default_closure_input()?,
    };
    let dto = &input.constraints;
    let listed = dto.local_observables()?;
    let psi = input.state.as_ref().map(StateDto::to_state).transpose()?;
    let mut out = serde_json::Map::new();

    let system = match (dto.correlations.is_empty(), dto.exclusions.is_empty()) {
        (false, false) => {
            return Err(CliError::Validation("give either correlations or exclusions, not both".into()));
        }
        (true, false) => {
            let ex = dto.exclusion_list()?;
            if let Some(psi) = &psi {
                let p = ex
                    .iter()
                    .map(|e| exclusion_probability(psi, &listed, e))
                    .collect::<Result<Vec<_>, _>>()?;
                out.insert("max_constraint_probability".into(), json!(p.into_iter().fold(0.0, f64::max)));
            }
            ConstraintSystem::from_exclusions(listed.clone(), &ex)?
        }
        _ => {
            let set = dto.correlation_set()?;
            let closed = set.dual_closed();
            if let Some(psi) = &psi {
                let mut all = true;
                for c in closed.correlations() {
                    all &= nonlocality_core::correlation::holds(&c, psi, cli.tol)?;
                }
                out.insert("correlations_hold".into(), json!(all));
            }
            out.insert("input_dual_closed".into(), json!(set.is_dual_closed()));
            out.insert("closure".into(), to_json(&ConstraintSetDto::from_set(&closed)?)?);
            ConstraintSystem::from_correlations(&closed)?
        }
    };

    let base = system.observables();
    out.insert(
        "base_observables".into(),
        to_json(&base.iter().map(ObservableDto::from_observable).collect::<Result<Vec<_>, _>>()?)?,
    );
    out.insert("rules".into(), to_json(system.rules())?);

    if let Some(seed) = &input.seed {
        let o = listed
            .get(seed.observable)
            .ok_or_else(|| CliError::Validation(format!("seed observable {} out of range", seed.observable)))?;
        let value = match seed.value {
            0 => false,
            1 => true,
            v => return Err(CliError::Validation(format!("seed value is 0 or 1, got {v}"))),
        };
        let lit = system
            .literal_of(o)
            .ok_or_else(|| CliError::Validation("seed observable takes part in no constraint".into()))?;
        let seed_lit = if value { lit } else { lit.negated() };
        out.insert("seed".into(), json!(seed_lit));
        let prop = match propagate(RealityLedger::seeded(seed_lit), &system) {
            Propagation::Consistent(l) => json!({ "consistent": true, "ledger": l }),
            Propagation::Contradiction { ledger, clash } => {
                json!({ "consistent": false, "ledger": ledger, "clash": clash })
            }
        };
        out.insert("propagation".into(), prop);
    }

    if base.len() <= MAX_LHV_OBSERVABLES {
        let models = lhv_search(&system)?;
        out.insert("lhv_models".into(), json!(models.len()));
        let shown: Vec<Vec<u8>> = models
            .iter()
            .take(16)
            .map(|m| (0..base.len()).map(|i| (m >> i & 1) as u8).collect())
            .collect();
        out.insert("lhv_model_sample".into(), json!(shown));
    } else {
        out.insert(
            "lhv_search_skipped".into(),
            json!(format!("{} base observables exceed the limit of {MAX_LHV_OBSERVABLES}", base.len())),
        );
    }

    let mut refuted = Vec::new();
    let mut first = None;
    for o in 0..base.len() {
        for value in [true, false] {
            if refute_seed(&system, o, value).is_some() {
                refuted.push(Literal::new(o, value));
            }
        }
        if first.is_none() {
            first = derive_contradiction(&system, o);
        }
    }
    out.insert("refuted_values".into(), to_json(&refuted)?);
    if let Some(c) = first {
        c.replay(&system)?;
        out.insert("contradiction".into(), to_json(&c)?);
    }
    Ok(CommandResult::json(Value::Object(out)))
}
