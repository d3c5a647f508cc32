use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use stplab::angles::{default_target, growth_csv, growth_probe, magic_theta, min_multiple, CircleAngle};
use stplab::experiments::{
    cos2_reference, detangle_histogram, random_sequence_profile, stsample_conditional, stsample_generate,
    ExperimentConfig,
};
use stplab::poststp::{
    apply_heis_via_resource, approx_epsilon_plan, execute_plan, random_forced_transcript, trotter_imaginary_evolve,
    verify_amplitude_bound, HeisenbergSchedule, ResourceFactory, TrotterMode,
};
use stplab::pqc::{
    default_ancilla_tree, exact_distribution, measure_tree, prepare_labelled_tree, reduce_root_spin, tree_state,
    weak_sample, Caps, Node, SpinMode, Tree,
};
use stplab::protocols::{demo_bell, demo_cnot, demo_magic, demo_standards, DemoSummary, StandardsVariant};
use stplab::seqcheck::{
    appendix_d_o1, appendix_d_o2, four_ancilla_order12, is_equiangular_sequence, is_no_leakage, order_of,
    relaxed_two_ancilla, search_lemma, sequence_to_operator, signed_permutation_test, six_ancilla, spin0_basis,
    swap_by_teleport, verify_appendix_d, MatrixNorm, ProjectorSequence,
};
use stplab::verify::{compare_runs, run_selected};
use stplab::StateVector;

use crate::args::*;
use crate::output::Output;
use crate::CliError;

type Outcome = std::result::Result<Value, CliError>;

fn read_input(path: &Path) -> std::result::Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Collects failed assertions; an empty list means success.
#[derive(Default)]
struct Asserts(Vec<String>);

impl Asserts {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.0.push(what.into());
        }
    }

    fn finish(self, summary: Value) -> Outcome {
        if self.0.is_empty() {
            Ok(summary)
        } else {
            Err(CliError::Assertion(self.0, summary))
        }
    }
}

pub fn run(cmd: &Command, out: &Output) -> Outcome {
    match cmd {
        Command::Demo(d) => demo(d, out),
        Command::Pqc(p) => pqc(p, out),
        Command::Post(p) => post(p, out),
        Command::Seq(s) => seq(s, out),
        Command::Exp(e) => exp(e, out),
        Command::Angle(a) => angle(a, out),
        Command::VerifyAll(v) => verify_all(v, out),
    }
}

fn demo_result(s: &DemoSummary, out: &Output, transcript: Option<&str>) -> Outcome {
    out.json("summary.json", s)?;
    if let Some(t) = transcript {
        out.jsonl("transcript.jsonl", t)?;
    }
    let mut a = Asserts::default();
    a.check(s.success_rate == 1.0, format!("success rate {} < 1", s.success_rate));
    a.finish(serde_json::to_value(s)?)
}

fn demo(d: &Demo, out: &Output) -> Outcome {
    let seed = out.derive_seed("");
    match d {
        Demo::Bell(a) => {
            let (s, t) = demo_bell(seed, a.trials)?;
            demo_result(&s, out, Some(&t.to_jsonl()))
        }
        Demo::Cnot(a) => {
            let (s, t) = demo_cnot(seed, a.trials, a.forced)?;
            demo_result(&s, out, Some(&t.to_jsonl()))
        }
        Demo::Magic(a) => {
            let (s, t) = demo_magic(seed, a.trials)?;
            demo_result(&s, out, Some(&t.to_jsonl()))
        }
        Demo::Standards(a) => {
            let variant = match a.variant {
                Variant::Quadratic => StandardsVariant::Quadratic,
                Variant::Linear => StandardsVariant::Linear,
            };
            let s = demo_standards(seed, a.trials, a.target, variant)?;
            demo_result(&s, out, None)
        }
    }
}

fn caps(s: &SpinArgs) -> Caps {
    let mode = if s.exact { SpinMode::Exact } else { SpinMode::Protocol };
    Caps { mode, n_meas_factor: s.n_meas_factor, ..Caps::default() }
}

fn leaf(q: usize) -> Node {
    Node::Leaf(q)
}

fn load_lambda(path: Option<&Path>) -> std::result::Result<Tree, CliError> {
    match path {
        Some(p) => Ok(Tree::from_json(&read_input(p)?)?),
        None => Ok(Tree::labelled(Node::join(Node::join(leaf(0), leaf(1), Some(2)), leaf(2), Some(1)), 1)?),
    }
}

fn load_shape(path: Option<&Path>) -> std::result::Result<Node, CliError> {
    match path {
        Some(p) => Ok(Tree::from_json(&read_input(p)?)?.node.unlabelled()),
        None => Ok(Node::join(Node::join(leaf(1), leaf(2), None), leaf(0), None)),
    }
}

fn nonzero_amps(s: &StateVector) -> Vec<Value> {
    s.amps()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > 1e-24)
        .map(|(i, a)| json!([i, a.re, a.im]))
        .collect()
}

fn pqc(p: &Pqc, out: &Output) -> Outcome {
    let mut rng = out.rng("");
    let mut a = Asserts::default();
    match p {
        Pqc::Prepare(args) => {
            let lambda = load_lambda(args.tree.as_deref())?;
            lambda.validate_labelled()?;
            let n = lambda.n_leaves();
            let j = lambda.root_spin().unwrap_or(0);
            let ancilla = if j > 0 { Some(default_ancilla_tree(n, j, -lambda.root_2sz.unwrap_or(0))?) } else { None };
            let red = reduce_root_spin(&lambda, ancilla.as_ref())?;
            let state = prepare_labelled_tree(&red.hat, &mut rng, &caps(&args.spin))?;
            let oracle = tree_state(&red.hat, red.hat.n_leaves())?;
            let fidelity = state.fidelity(&oracle);
            a.check(fidelity >= 1.0 - 1e-6, format!("fidelity {fidelity} vs the exact tree state"));
            let summary = json!({
                "n_qubits": state.n_qubits(),
                "ancillas": state.n_qubits() - n,
                "fidelity": fidelity,
                "amplitudes": nonzero_amps(&state),
            });
            out.json("prepare.json", &summary)?;
            a.finish(summary)
        }
        Pqc::Measure(args) => {
            let lambda = load_lambda(args.lambda.as_deref())?;
            let shape = load_shape(args.tree.as_deref())?;
            let mut state = tree_state(&lambda, lambda.n_leaves())?;
            let got = measure_tree(&mut state, &shape, &mut rng, &caps(&args.spin))?;
            let exact = exact_distribution(&lambda, &shape)?;
            let flat = got.flat_labels();
            let p = exact.iter().find(|(l, _)| *l == flat).map_or(0.0, |(_, p)| *p);
            a.check(p > 0.0, "outcome has zero exact probability");
            let summary = json!({ "tree": got, "labels": flat, "exact_probability": p });
            out.json("measure.json", &summary)?;
            out.jsonl("transcript.jsonl", &state.transcript().to_jsonl())?;
            a.finish(summary)
        }
        Pqc::Sample(args) => {
            let lambda = load_lambda(args.lambda.as_deref())?;
            let shape = load_shape(args.tree.as_deref())?;
            let c = caps(&args.spin);
            let (counts, nonzero_root) = weak_sample(&lambda, &shape, args.shots, &mut rng, &c, &c)?;
            let exact = exact_distribution(&lambda, &shape)?;
            let width = exact.first().map_or(0, |(l, _)| l.len());
            let mut csv: Vec<String> = (0..width).map(|k| format!("v{k}")).collect();
            csv.push("count".into());
            let mut body = csv.join(",") + "\n";
            for (labels, count) in &counts {
                let cols: Vec<String> = labels.iter().map(|x| x.to_string()).collect();
                body.push_str(&format!("{},{count}\n", cols.join(",")));
            }
            out.csv("sample.csv", &body)?;
            let shots = args.shots.max(1) as f64;
            let mut max_z = 0.0f64;
            for (labels, p) in &exact {
                let c = counts.get(labels).copied().unwrap_or(0) as f64;
                let sd = (shots * p * (1.0 - p)).sqrt();
                if sd > 0.0 {
                    max_z = max_z.max((c - shots * p).abs() / sd);
                }
            }
            let stray: u64 = counts.iter().filter(|(l, _)| !exact.iter().any(|(e, _)| e == *l)).map(|(_, c)| c).sum();
            let summary = json!({
                "shots": args.shots,
                "nonzero_root": nonzero_root,
                "stray_shots": stray,
                "max_abs_z": max_z,
                "exact": exact.iter().map(|(l, p)| json!({"labels": l, "probability": p})).collect::<Vec<_>>(),
            });
            out.json("sample.json", &summary)?;
            a.finish(summary)
        }
    }
}

fn heis_direct(psi: &StateVector, a: usize, b: usize, eps: f64) -> stplab::Result<StateVector> {
    let mut s = psi.clone();
    s.apply_heisenberg_raw(a, b, eps)?;
    s.normalize()?;
    Ok(s)
}

fn post(p: &Post, out: &Output) -> Outcome {
    let mut rng = out.rng("");
    let mut a = Asserts::default();
    match p {
        Post::Resource(args) => {
            if args.qubits < 2 {
                return Err(CliError::Usage("need at least 2 qubits".into()));
            }
            let mut worst = 0.0f64;
            for _ in 0..args.trials {
                let psi = StateVector::random(args.qubits, &mut rng)?;
                let (x, y) = rng.distinct_pair(args.qubits);
                let mut s = psi.clone();
                apply_heis_via_resource(&mut s, x, y, args.eps, &mut rng, true)?;
                worst = worst.max(1.0 - s.fidelity(&heis_direct(&psi, x, y, args.eps)?));
            }
            a.check(worst <= 1e-10, format!("infidelity {worst:e} > 1e-10"));
            let summary = json!({ "eps": args.eps, "trials": args.trials, "max_infidelity": worst });
            out.json("resource.json", &summary)?;
            a.finish(summary)
        }
        Post::Epsilon(args) => {
            let plan = approx_epsilon_plan(args.target, args.delta)?;
            let psi = StateVector::random(2, &mut rng)?;
            let mut s = psi.clone();
            let mut factory = ResourceFactory::new();
            execute_plan(&mut s, 0, 1, &plan, args.protocol.then_some(&mut factory), &mut rng)?;
            s.normalize()?;
            let planned = 1.0 - s.fidelity(&heis_direct(&psi, 0, 1, plan.effective_eps)?);
            let target = 1.0 - s.fidelity(&heis_direct(&psi, 0, 1, args.target)?);
            a.check(planned <= 1e-9, format!("execution vs planned infidelity {planned:e}"));
            a.check((plan.effective_eps - args.target).abs() <= args.delta, "plan misses the target");
            let summary = json!({ "plan": plan, "infidelity_vs_planned": planned, "infidelity_vs_target": target });
            out.json("epsilon.json", &summary)?;
            a.finish(summary)
        }
        Post::Evolve(args) => {
            let schedule = match &args.schedule {
                Some(p) => HeisenbergSchedule::from_json(&read_input(p)?)?,
                None => HeisenbergSchedule::ring(args.ring, args.j, args.time),
            };
            let n = schedule
                .steps
                .iter()
                .flat_map(|s| s.couplings.iter().map(|&(i, j, _)| i.max(j) + 1))
                .max()
                .unwrap_or(args.ring);
            let n = n + n % 2;
            let pairs: Vec<(usize, usize)> = (0..n / 2).map(|k| (2 * k, 2 * k + 1)).collect();
            let start = StateVector::singlet_pairs(n, &pairs)?;
            let mode = match args.mode {
                Mode::Direct => TrotterMode::Direct,
                Mode::Planned => TrotterMode::Planned { delta: args.delta },
                Mode::Protocol => TrotterMode::Protocol { delta: args.delta },
            };
            let ev = trotter_imaginary_evolve(&start, &schedule, args.dt, mode, &mut rng)?;
            out.json("evolve.json", &ev.report)?;
            a.finish(serde_json::to_value(&ev.report)?)
        }
        Post::Bound(args) => {
            if args.spins % 2 != 0 || args.spins < 2 {
                return Err(CliError::Usage("spin count must be even and at least 2".into()));
            }
            let mut rows = String::from("trial,j,observed,bound,first_violation\n");
            let mut violations = 0;
            for k in 0..args.trials {
                let t = random_forced_transcript(args.spins, args.len, &mut rng)?;
                let c = verify_amplitude_bound(&t, args.spins);
                violations += usize::from(!c.passed());
                let first = c.first_violation.map_or(String::new(), |v| v.to_string());
                rows.push_str(&format!("{k},{},{:.17e},{:.17e},{first}\n", c.j, c.observed, c.bound));
            }
            out.csv("bound.csv", &rows)?;
            a.check(violations == 0, format!("{violations} bound violations"));
            let summary = json!({ "spins": args.spins, "trials": args.trials, "violations": violations });
            out.json("bound.json", &summary)?;
            a.finish(summary)
        }
    }
}

fn named(n: Named) -> ProjectorSequence {
    match n {
        Named::SixAncilla => six_ancilla(),
        Named::FourAncilla => four_ancilla_order12(),
        Named::Relaxed => relaxed_two_ancilla(),
        Named::O1 => appendix_d_o1(),
        Named::O2 => appendix_d_o2(),
        Named::Swap => swap_by_teleport(),
    }
}

fn seq(s: &Seq, out: &Output) -> Outcome {
    let mut a = Asserts::default();
    match s {
        Seq::Check(args) => {
            let sq = match &args.file {
                Some(p) => ProjectorSequence::from_json(&read_input(p)?)?,
                None => named(args.named),
            };
            let basis = spin0_basis(sq.n_comp)?;
            let leak = is_no_leakage(&sq, &basis, args.tol)?;
            let equi = is_equiangular_sequence(&sq, &basis, args.tol)?;
            let op = sequence_to_operator(&sq, &basis, false)?;
            let signed = if leak.no_leakage && basis.n_spins <= 8 {
                signed_permutation_test(&op.matrix, &basis, 1e-8)?
            } else {
                None
            };
            let order = if leak.no_leakage {
                let normed = sequence_to_operator(&sq, &basis, true)?;
                order_of(&normed.matrix, args.tol, 1000)
            } else {
                None
            };
            let summary = json!({
                "sequence": sq,
                "no_leakage": leak,
                "equiangular": equi,
                "signed_permutation": signed,
                "order": order,
            });
            out.json("check.json", &summary)?;
            a.finish(summary)
        }
        Seq::AppendixD(args) => {
            let norm = match args.norm {
                Norm::Frobenius => MatrixNorm::Frobenius,
                Norm::Operator => MatrixNorm::Operator,
            };
            let d = verify_appendix_d(args.depth, norm)?;
            out.json("appendix_d.json", &d)?;
            let mut rows = String::from("m,distance,distance_abab\n");
            for (k, (x, y)) in d.distances.iter().zip(&d.distances_abab).enumerate() {
                rows.push_str(&format!("{},{x:.17e},{y:.17e}\n", k + 1));
            }
            out.csv("distances.csv", &rows)?;
            a.check(d.o1.eigenvalue_error <= 1e-6, "O1 eigenvalues differ from the printed matrix");
            a.check(d.o2.eigenvalue_error <= 1e-6, "O2 eigenvalues differ from the printed matrix");
            a.check(d.strictly_decreasing, "nested distances do not strictly decrease");
            a.finish(json!({
                "o1_eigenvalues": d.o1.eigenvalues,
                "o2_eigenvalues": d.o2.eigenvalues,
                "distances": d.distances,
                "log_slope": d.log_slope,
            }))
        }
        Seq::Search(args) => {
            let rep = search_lemma(args.count, args.max_len, &mut out.rng(""))?;
            out.json("search.json", &rep)?;
            let uncertified = rep.no_leakage - rep.certified;
            a.check(uncertified == 0, format!("{uncertified} no-leakage sequences are not signed permutations"));
            a.finish(json!({ "sequences": rep.sequences, "no_leakage": rep.no_leakage, "certified": rep.certified }))
        }
    }
}

fn exp(e: &Exp, out: &Output) -> Outcome {
    let a = Asserts::default();
    match e {
        Exp::Profile(args) => {
            let p = random_sequence_profile(args.spins, args.meas, &mut out.rng(""))?;
            out.csv("profile.csv", &p.to_csv())?;
            let summary = json!({
                "n_spins": p.n_spins,
                "n_meas": p.n_meas,
                "pairs": p.rows.len(),
                "fraction_in_0.7_0.8": p.fraction_in(0.7, 0.8),
                "pairs_at_0_or_1": p.rows.iter().filter(|r| r.p_triplet == 0.0 || r.p_triplet == 1.0).count(),
            });
            out.json("profile.json", &summary)?;
            a.finish(summary)
        }
        Exp::Detangle(args) => {
            let cfg = ExperimentConfig {
                n_spins: args.spins,
                n_meas: args.meas,
                n_sequences: args.sequences,
                n_runs: args.runs,
                bins: args.bins,
                master_seed: out.derive_seed(""),
            };
            let h = detangle_histogram(&cfg)?;
            out.csv("detangle_s.csv", &h.s_view.to_csv())?;
            out.csv("detangle_t.csv", &h.t_view.to_csv())?;
            out.svg("detangle_s.svg", &h.s_view.to_svg(&format!("P(S), 2N = {}", args.spins)))?;
            out.svg("detangle_t.svg", &h.t_view.to_svg(&format!("P(T), 2N = {}", args.spins)))?;
            let s = &h.s_view;
            let summary = json!({
                "config": cfg,
                "samples": s.total(),
                "uniform_baseline": s.uniform_baseline(),
                "count_at_0": s.count_at(0.0),
                "count_at_3/4": s.count_at(0.75),
                "count_at_1": s.count_at(1.0),
            });
            out.json("detangle.json", &summary)?;
            a.finish(summary)
        }
        Exp::Stsample(args) => {
            let inst = stsample_generate(args.spins, args.rounds, out.derive_seed(""))?;
            let cond = stsample_conditional(&inst)?;
            out.json("instance.json", &inst)?;
            out.json("conditional.json", &cond)?;
            a.finish(json!({ "instance": inst, "conditional": cond }))
        }
        Exp::Cos2(args) => {
            let c = cos2_reference(args.samples, args.bins, &mut out.rng(""))?;
            out.csv("cos2.csv", &c.histogram.to_csv())?;
            out.svg("cos2.svg", &c.histogram.to_svg("cos^2 theta"))?;
            let summary = json!({ "samples": args.samples, "ks": c.ks });
            out.json("cos2.json", &summary)?;
            a.finish(summary)
        }
    }
}

fn angles_of(args: &AngleArgs) -> (CircleAngle, CircleAngle) {
    (CircleAngle::new(args.theta.unwrap_or_else(magic_theta)), CircleAngle::new(args.phi.unwrap_or_else(default_target)))
}

fn angle(an: &Angle, out: &Output) -> Outcome {
    let a = Asserts::default();
    match an {
        Angle::MinMultiple(args) => {
            let (theta, phi) = angles_of(&args.angle);
            let m = min_multiple(theta, phi, args.delta, args.angle.m_max)?;
            let summary = json!({ "theta": theta.radians(), "phi": phi.radians(), "delta": args.delta, "m": m });
            out.json("min_multiple.json", &summary)?;
            a.finish(summary)
        }
        Angle::Probe(args) => {
            let (theta, phi) = angles_of(&args.angle);
            let rows = growth_probe(theta, phi, &args.deltas, args.angle.m_max)?;
            out.csv("probe.csv", &growth_csv(&rows))?;
            out.json("probe.json", &rows)?;
            a.finish(serde_json::to_value(&rows)?)
        }
    }
}

fn verify_all(args: &VerifyAllArgs, out: &Output) -> Outcome {
    let ids: Vec<u8> = if args.only.is_empty() { (1..=13).collect() } else { args.only.clone() };
    if let Some(bad) = ids.iter().chain(&args.allow_fail).find(|&&i| !(1..=14).contains(&i)) {
        return Err(CliError::Usage(format!("no criterion {bad}")));
    }
    let ids: Vec<u8> = ids.into_iter().filter(|&i| i != 14).collect();
    let (first, repeat) = (out.dir.join("run"), out.dir.join("repeat"));
    let mut report = run_selected(out.seed, &first, &ids)?;
    let again = run_selected(out.seed, &repeat, &ids)?;
    let same_files = report.files == again.files;
    let mut det = compare_runs(&first, &repeat, &report.files);
    if !same_files {
        det.passed = false;
    }
    report.criteria.push(det);
    let mut a = Asserts::default();
    for c in &report.criteria {
        println!("{}", c.line());
        a.check(c.passed || args.allow_fail.contains(&c.id), format!("criterion {} failed", c.id));
    }
    let passed = report.criteria.iter().filter(|c| c.passed).count();
    println!("{passed}/{} criteria pass", report.criteria.len());
    out.json("verify.json", &report)?;
    a.finish(json!({ "passed": passed, "total": report.criteria.len() }))
}
