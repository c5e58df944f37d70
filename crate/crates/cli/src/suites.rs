use ndarray::{array, Array2};
use psboson::emm::{emm_eigenpairs, emm_t_matrix, real_residual, su11_secular, symplectic_pairing};
use psboson::finitesim::{parse_matrix, verify_theorem1, MatrixFormat};
use psboson::fock::{commutator, InteriorMask, Operator, TruncationSpec};
use psboson::linalg::{eig_dense, multiset_distance};
use psboson::pseudoboson::{
    biorthogonality_matrix, build_hamiltonian, build_pseudoboson_ops, diagonal_form_check, eigenvector,
    eigenvector_adjoint, energy, factorial, relative_residual, similarity_check, ModelParams,
};
use psboson::sectors::{
    b_generators, casimir_commutes_check, casimir_reduction_check, converge_sector_spectrum, full_vs_sector_check,
    hermitian_variant_scan, lowest_weight_residuals, sector_spectrum, su11_generators, transpose_similarity_check,
    SectorSpec, Weight,
};
use psboson::C64;
use serde_json::json;

use crate::report::{Cell, Check, Relation, Report, Table};
use crate::{CommandKind, RunConfig, RunError};

type Out = Result<Report, RunError>;

pub fn run(cfg: &RunConfig) -> Out {
    if cfg.gamma < 0.0 {
        return Err(psboson::Error::NegativeGamma(cfg.gamma).into());
    }
    match &cfg.command {
        CommandKind::Spectrum => spectrum(cfg),
        CommandKind::Sectors => sectors(cfg),
        CommandKind::Biorth => biorth(cfg),
        CommandKind::Commutators => commutators(cfg),
        CommandKind::Emm => emm(cfg),
        CommandKind::Stability { lambda, depths } => stability(cfg, *lambda, depths),
        CommandKind::Theorem1 { input } => {
            let text = std::fs::read_to_string(input)
                .map_err(|e| RunError::Usage(format!("cannot read {}: {e}", input.display())))?;
            let m = parse_matrix(&text, MatrixFormat::detect(&text))?;
            let mut r = theorem1(cfg, &m)?;
            r.params.push(("input", json!(input.display().to_string())));
            Ok(r)
        }
        CommandKind::VerifyAll => verify_all(cfg),
    }
}

fn params(cfg: &RunConfig) -> ModelParams {
    ModelParams::new(cfg.beta, cfg.gamma)
}

fn model_params(r: &mut Report, cfg: &RunConfig) {
    r.params.push(("beta", json!(cfg.beta)));
    r.params.push(("gamma", json!(cfg.gamma)));
}

fn k_values(cfg: &RunConfig) -> impl Iterator<Item = i64> {
    cfg.k_range.0..=cfg.k_range.1
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn spectrum(cfg: &RunConfig) -> Out {
    let p = params(cfg);
    let t = TruncationSpec::square(cfg.trunc);
    let mut r = Report::new("spectrum");
    model_params(&mut r, cfg);
    r.params.push(("trunc", json!(cfg.trunc)));
    r.params.push(("depth", json!(cfg.depth)));
    r.params.push(("m_max", json!(cfg.m_max)));
    r.params.push(("n_max", json!(cfg.n_max)));

    let (h, h_adj) = build_hamiltonian(p, t);
    let levels = cfg.m_max.min(cfg.n_max) + 1;
    let mut table =
        Table::new("spectrum", &["m", "n", "energy", "sector_k", "sector_eigenvalue", "residual_h", "residual_h_adj"]);
    let (mut worst_h, mut worst_adj, mut worst_sector) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut sector_cache: Vec<(i64, Vec<C64>)> = Vec::new();
    for m in 0..=cfg.m_max {
        for n in 0..=cfg.n_max {
            let e = energy(p, m, n);
            let rh = relative_residual(&h, e, &eigenvector(p, m, n, t)?)?;
            let ra = relative_residual(&h_adj, e, &eigenvector_adjoint(p, m, n, t)?)?;
            let k = m as i64 - n as i64;
            if !sector_cache.iter().any(|(kk, _)| *kk == k) {
                let s = sector_spectrum(SectorSpec::new(k, cfg.depth), p, levels)?;
                sector_cache.push((k, s.report.values));
            }
            let values = &sector_cache.iter().find(|(kk, _)| *kk == k).expect("cached").1;
            let sector_value = values[m.min(n)];
            worst_sector = worst_sector.max((sector_value - C64::new(e, 0.0)).norm());
            worst_h = worst_h.max(rh);
            worst_adj = worst_adj.max(ra);
            table.push(vec![m.into(), n.into(), e.into(), k.into(), sector_value.re.into(), rh.into(), ra.into()]);
        }
    }
    r.checks.push(Check::at_most("residual_h", worst_h, cfg.tol.residual));
    r.checks.push(Check::at_most("residual_h_adj", worst_adj, cfg.tol.residual));
    r.checks.push(Check::at_most("sector_cross_check", worst_sector, cfg.tol.sector));
    r.tables.push(table);
    Ok(r)
}

fn sectors(cfg: &RunConfig) -> Out {
    let p = params(cfg);
    let mut r = Report::new("sectors");
    model_params(&mut r, cfg);
    r.params.push(("depth", json!(cfg.depth)));
    r.params.push(("k_range", json!([cfg.k_range.0, cfg.k_range.1])));
    r.params.push(("union_trunc", json!(cfg.union_trunc)));

    let schedule = [(cfg.depth / 2).max(3), cfg.depth, 2 * cfg.depth];
    let mut table =
        Table::new("sectors", &["k", "depth", "n", "eigenvalue_re", "eigenvalue_im", "target", "error", "residual"]);
    let (mut closed, mut change, mut transpose) = (0.0_f64, 0.0_f64, 0.0_f64);
    let (mut a_cr, mut b_cr, mut casimir, mut lw_lower, mut lw_eig) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for k in k_values(cfg) {
        let conv = converge_sector_spectrum(k, p, 3, &schedule)?;
        for step in &conv.steps {
            for (n, v) in step.report.values.iter().enumerate() {
                table.push(vec![
                    k.into(),
                    step.spec.depth.into(),
                    n.into(),
                    v.re.into(),
                    v.im.into(),
                    step.targets[n].into(),
                    step.errors[n].into(),
                    step.report.residuals[n].into(),
                ]);
            }
        }
        let last = conv.last();
        closed = closed.max(last.max_error());
        let prev = &conv.steps[conv.steps.len() - 2];
        change = change.max(max_of(prev.report.values.iter().zip(&last.report.values).map(|(a, b)| (a - b).norm())));

        let spec = SectorSpec::new(k, cfg.depth);
        transpose = transpose.max(transpose_similarity_check(spec, p)?);
        for w in [Weight::Lowest, Weight::Highest] {
            a_cr = a_cr.max(su11_generators(spec, w)?.relation_deviation()?);
        }
        if cfg.gamma > 0.0 {
            b_cr = b_cr.max(b_generators(spec, cfg.gamma)?.relation_deviation()?);
            casimir = casimir.max(casimir_reduction_check(spec, cfg.gamma)?.max());
            let (lo, eig) = lowest_weight_residuals(spec, cfg.gamma)?;
            lw_lower = lw_lower.max(lo);
            lw_eig = lw_eig.max(eig);
        }
    }
    let union = full_vs_sector_check(p, TruncationSpec::square(cfg.union_trunc))?;

    r.checks.push(Check::at_most("closed_form_error", closed, cfg.tol.sector));
    r.checks.push(Check::at_most("depth_doubling_change", change, psboson::sectors::CONVERGENCE_TOL));
    r.checks.push(Check::at_most("transpose_similarity", transpose, cfg.tol.similarity));
    r.checks.push(Check::at_most("a_relations", a_cr, cfg.tol.algebra));
    if cfg.gamma > 0.0 {
        r.checks.push(Check::at_most("b_relations", b_cr, cfg.tol.algebra));
        r.checks.push(Check::at_most("casimir_reduction", casimir, cfg.tol.casimir));
        r.checks.push(Check::at_most("lowest_weight_annihilated", lw_lower, cfg.tol.residual));
        r.checks.push(Check::at_most("lowest_weight_eigenvalue", lw_eig, cfg.tol.residual));
    }
    r.checks.push(Check::at_most("full_vs_sector_union", union, cfg.tol.union));
    r.tables.push(table);
    Ok(r)
}

fn biorth(cfg: &RunConfig) -> Out {
    let p = params(cfg);
    let mut r = Report::new("biorth");
    model_params(&mut r, cfg);
    r.params.push(("trunc", json!(cfg.trunc)));
    r.params.push(("m_max", json!(cfg.m_max)));
    r.params.push(("n_max", json!(cfg.n_max)));

    let rep = biorthogonality_matrix(p, cfg.m_max, cfg.n_max, TruncationSpec::square(cfg.trunc))?;
    let alpha = p.alpha();
    let scale = 1.0 / (1.0 + alpha * alpha);
    let mut table = Table::new("gram", &["m", "n", "p", "q", "re", "im", "expected"]);
    for m in 0..=cfg.m_max {
        for n in 0..=cfg.n_max {
            for pp in 0..=cfg.m_max {
                for q in 0..=cfg.n_max {
                    let g = rep.entry((m, n), (pp, q));
                    let expected = if (m, n) == (pp, q) { factorial(m) * factorial(n) * scale } else { 0.0 };
                    table.push(vec![
                        m.into(),
                        n.into(),
                        pp.into(),
                        q.into(),
                        g.re.into(),
                        g.im.into(),
                        expected.into(),
                    ]);
                }
            }
        }
    }
    r.checks.push(Check::at_most("offdiagonal", rep.max_offdiag, cfg.tol.biorth));
    r.checks.push(Check::at_most("diagonal", rep.max_diag_error, cfg.tol.biorth));
    r.checks.push(Check::at_most("vacuum_overlap", (rep.scale - C64::new(scale, 0.0)).norm(), cfg.tol.biorth));
    r.tables.push(table);
    Ok(r)
}

fn commutators(cfg: &RunConfig) -> Out {
    let p = params(cfg);
    let t = TruncationSpec::square(cfg.trunc);
    let mut r = Report::new("commutators");
    model_params(&mut r, cfg);
    r.params.push(("trunc", json!(cfg.trunc)));

    let s = build_pseudoboson_ops(p, t)?;
    let (h, _) = build_hamiltonian(p, t);
    let id = Operator::identity(t);
    let zero = Operator::zeros(t);
    let rho = p.rho();
    let mask = InteriorMask::new(1);
    let cases: Vec<(&str, &Operator, &Operator, Operator, f64)> = vec![
        ("[c,c‡]-1", &s.c, &s.c_ddag, id.clone(), cfg.tol.algebra),
        ("[d,d‡]-1", &s.d, &s.d_ddag, id, cfg.tol.algebra),
        ("[c,d]", &s.c, &s.d, zero.clone(), cfg.tol.algebra),
        ("[c,d‡]", &s.c, &s.d_ddag, zero.clone(), cfg.tol.algebra),
        ("[c‡,d]", &s.c_ddag, &s.d, zero.clone(), cfg.tol.algebra),
        ("[c‡,d‡]", &s.c_ddag, &s.d_ddag, zero, cfg.tol.algebra),
        ("[H,c‡]-(β+ρ)c‡", &h, &s.c_ddag, s.c_ddag.scale(p.beta + rho), cfg.tol.heisenberg),
        ("[H,d‡]-(ρ-β)d‡", &h, &s.d_ddag, s.d_ddag.scale(rho - p.beta), cfg.tol.heisenberg),
        ("[H,c]+(β+ρ)c", &h, &s.c, s.c.scale(-(p.beta + rho)), cfg.tol.heisenberg),
        ("[H,d]+(ρ-β)d", &h, &s.d, s.d.scale(-(rho - p.beta)), cfg.tol.heisenberg),
    ];
    let mut table = Table::new("commutators", &["relation", "interior_deviation", "full_deviation"]);
    for (name, x, y, target, tol) in cases {
        let comm = commutator(x, y)?;
        let interior = comm.max_abs_diff_masked(&target, mask)?;
        let full = comm.max_abs_diff(&target)?;
        table.push(vec![name.into(), interior.into(), full.into()]);
        r.checks.push(Check::at_most(name, interior, tol));
    }
    let diag = diagonal_form_check(p, t)?;
    table.push(vec!["diagonal_form".into(), diag.into(), Cell::Num(f64::NAN)]);
    r.checks.push(Check::at_most("diagonal_form", diag, cfg.tol.algebra));
    r.checks.push(Check::at_most("casimir_commutes", casimir_commutes_check(p, t)?, cfg.tol.algebra));
    let small = TruncationSpec::square(cfg.trunc.min(6));
    r.checks.push(Check::at_most("similarity", similarity_check(p, small)?, cfg.tol.similarity));
    r.tables.push(table);
    Ok(r)
}

fn emm(cfg: &RunConfig) -> Out {
    let p = params(cfg);
    let mut r = Report::new("emm");
    model_params(&mut r, cfg);

    let t = emm_t_matrix(p);
    let sol = emm_eigenpairs(p);
    let numeric = eig_dense(&t.mapv(|x| C64::new(x, 0.0)))?;
    let closed: Vec<C64> = sol.pairs.iter().map(|e| C64::new(e.lambda, 0.0)).collect();
    let scale = 1.0 + p.rho() + p.beta.abs();

    let mut table = Table::new("emm", &["index", "lambda", "x_a", "x_b", "y_a", "y_b", "residual"]);
    let mut worst = 0.0_f64;
    for (i, pair) in sol.pairs.iter().enumerate() {
        let v: Vec<f64> = pair.vec.coords().iter().map(|z| z.re).collect();
        let res = real_residual(&t, pair.lambda, &v) / scale;
        worst = worst.max(res);
        table.push(vec![
            (i + 1).into(),
            pair.lambda.into(),
            v[0].into(),
            v[1].into(),
            v[2].into(),
            v[3].into(),
            res.into(),
        ]);
    }
    let mut numeric_table = Table::new("emm_numeric", &["index", "re", "im", "residual"]);
    for (i, v) in numeric.values.iter().enumerate() {
        numeric_table.push(vec![(i + 1).into(), v.re.into(), v.im.into(), numeric.residuals[i].into()]);
    }

    r.checks.push(Check::at_most("spectrum", multiset_distance(&numeric.values, &closed)?, cfg.tol.emm));
    r.checks.push(Check::at_most("closed_form_eigenvectors", worst, cfg.tol.emm));
    if cfg.gamma > 0.0 {
        let [c, d, c_ddag, d_ddag] = sol.pseudoboson_coefficients(p)?;
        let one = C64::new(1.0, 0.0);
        let pairing = (symplectic_pairing(&c, &c_ddag)? - one)
            .norm()
            .max((symplectic_pairing(&d, &d_ddag)? - one).norm())
            .max(symplectic_pairing(&c, &d_ddag)?.norm())
            .max(symplectic_pairing(&c, &d)?.norm());
        r.checks.push(Check::at_most("pairing_normalization", pairing, cfg.tol.emm));
        let sec = su11_secular(cfg.gamma);
        let sec_worst = max_of(sec.pairs.iter().map(|(l, v)| real_residual(&sec.matrix, *l, v)));
        r.checks.push(Check::at_most("su11_secular", sec_worst / scale, cfg.tol.emm));
    }
    r.tables.push(table);
    r.tables.push(numeric_table);
    Ok(r)
}

fn stability(cfg: &RunConfig, lambda: f64, depths: &[usize]) -> Out {
    if depths.is_empty() {
        return Err(RunError::Usage("--depths must list at least one depth".into()));
    }
    let mut r = Report::new("stability");
    r.params.push(("beta", json!(cfg.beta)));
    r.params.push(("lambda", json!(lambda)));
    r.params.push(("depths", json!(depths)));
    r.params.push(("k_range", json!([cfg.k_range.0, cfg.k_range.1])));
    stability_into(&mut r, cfg, lambda, depths, "")?;
    Ok(r)
}

fn stability_into(
    r: &mut Report,
    cfg: &RunConfig,
    lambda: f64,
    depths: &[usize],
    prefix: &str,
) -> Result<(), RunError> {
    let mut table = Table::new(format!("{prefix}stability"), &["k", "lambda", "depth", "lowest", "target"]);
    for k in k_values(cfg) {
        let scan = hermitian_variant_scan(k, cfg.beta, lambda, depths)?;
        let target = scan.target.map_or(Cell::Num(f64::NAN), Cell::Num);
        for pt in &scan.points {
            table.push(vec![k.into(), lambda.into(), pt.depth.into(), pt.lowest.into(), target.clone()]);
        }
        let first = scan.points.first().expect("nonempty").lowest;
        let last = scan.points.last().expect("nonempty").lowest;
        if let Some(t) = scan.target {
            r.checks.push(Check::at_most(format!("{prefix}k={k} lowest→target"), (last - t).abs(), cfg.tol.sector));
        } else if lambda.abs() > 1.0 && depths.len() > 1 {
            r.checks.push(Check::at_least(format!("{prefix}k={k} lowest drop"), first - last, 1.0));
        }
    }
    r.tables.push(table);
    Ok(())
}

fn theorem1(cfg: &RunConfig, m: &Array2<C64>) -> Out {
    let mut r = Report::new("theorem1");
    r.params.push(("n", json!(m.nrows())));
    r.params.push(("real_tol", json!(cfg.tol.real)));
    let rep = verify_theorem1(m, cfg.tol.real)?;

    let mut summary = Table::new("theorem1", &["quantity", "value"]);
    for (name, v) in [
        ("max_imag", rep.max_imag),
        ("spectrum_match", rep.spectrum_match),
        ("biorth_error", rep.biorth_error),
        ("similarity_error", rep.similarity_error),
        ("column_identity_residual", rep.column_identity_residual),
        ("unitarity_defect", rep.unitarity_defect),
    ] {
        summary.push(vec![name.into(), v.into()]);
    }
    let mut eig = Table::new("eigenvalues", &["index", "value"]);
    for (i, v) in rep.eigenvalues.iter().enumerate() {
        eig.push(vec![i.into(), (*v).into()]);
    }
    let mut s = Table::new("s", &["row", "col", "re", "im"]);
    for ((i, j), z) in rep.s.indexed_iter() {
        s.push(vec![i.into(), j.into(), z.re.into(), z.im.into()]);
    }

    r.checks.push(Check::at_most("similarity_error", rep.similarity_error, cfg.tol.theorem1));
    r.checks.push(Check::at_most("column_identity_residual", rep.column_identity_residual, cfg.tol.theorem1));
    r.checks.push(Check::at_most("spectrum_match", rep.spectrum_match, cfg.tol.theorem1));
    r.checks.push(Check::at_most("biorth_error", rep.biorth_error, cfg.tol.theorem1_biorth));
    r.tables.extend([summary, eig, s]);
    Ok(r)
}

fn verify_all(cfg: &RunConfig) -> Out {
    let mut r = Report::new("verify-all");
    model_params(&mut r, cfg);
    r.params.push(("trunc", json!(cfg.trunc)));
    r.params.push(("depth", json!(cfg.depth)));
    r.params.push(("k_range", json!([cfg.k_range.0, cfg.k_range.1])));
    r.params.push(("m_max", json!(cfg.m_max)));
    r.params.push(("n_max", json!(cfg.n_max)));

    let witness = array![[1.0, 1.0], [0.0, 2.0]].mapv(|x| C64::new(x, 0.0));
    let mut stab = Report::new("stability");
    stability_into(&mut stab, cfg, 0.6, &[20, 40, 60], "λ=0.6 ")?;
    stability_into(&mut stab, cfg, 1.2, &[40, 80], "λ=1.2 ")?;
    let suites =
        [commutators(cfg)?, spectrum(cfg)?, biorth(cfg)?, emm(cfg)?, sectors(cfg)?, stab, theorem1(cfg, &witness)?];

    let mut summary = Table::new("summary", &["suite", "checks", "failed", "max_deviation", "pass"]);
    for suite in suites {
        let failed = suite.checks.iter().filter(|c| !c.pass()).count();
        let max_dev = max_of(suite.checks.iter().filter(|c| c.relation == Relation::AtMost).map(|c| c.value));
        summary.push(vec![
            suite.command.clone().into(),
            suite.checks.len().into(),
            failed.into(),
            max_dev.into(),
            (failed == 0).into(),
        ]);
        for c in suite.checks {
            r.checks.push(Check { name: format!("{}/{}", suite.command, c.name), ..c });
        }
    }
    r.tables.push(summary);
    Ok(r)
}
