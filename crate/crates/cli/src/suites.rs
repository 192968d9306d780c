//! The verification suites, one [`Context`] per vertex.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;
use utree_core::ff::{Fe, Field};
use utree_core::free::{self, BallSpace, FreeError};
use utree_core::group::Vertex;
use utree_core::hecke::{CosetSpace, Hecke, HeckeElem, RSpace};
use utree_core::laurent::LocalField;
use utree_core::oracle;
use utree_core::rep::{build_catalog_escalating, Gamma, IrredRep};
use utree_core::tree::Tree;

use crate::codec::{self, CodecError, Header};
use crate::config::{RunConfig, Suite};
use crate::report::{CatalogInfo, Check, CheckBuilder, Report};

/// Random attempts per meataxe chop before the coefficient field is enlarged.
pub const CHOP_ATTEMPTS: usize = 50;
const MAX_ESCALATIONS: u32 = 3;
/// Sources of a support propagation check beyond the ball are sampled down to about this many.
const PROPAGATION_SAMPLE: usize = 2000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("{0}")]
    Codec(#[from] CodecError),
    #[error("{context}: {msg}")]
    Core { context: &'static str, msg: String },
    #[error("{path}: {msg}")]
    Io { path: PathBuf, msg: String },
}

fn core(context: &'static str) -> impl Fn(&dyn std::fmt::Display) -> RunError {
    move |e| RunError::Core { context, msg: e.to_string() }
}

/// The objects every suite needs for one vertex.
pub struct Context {
    pub cfg: RunConfig,
    pub vertex: Vertex,
    pub space: CosetSpace,
    pub k: u32,
    pub catalog: Vec<IrredRep>,
    pub catalog_bytes: Vec<u8>,
}

impl Context {
    pub fn new(cfg: &RunConfig, vertex: Vertex) -> Result<Self, RunError> {
        let res = Field::with_degree(cfg.p, cfg.residue_degree()).map_err(|e| core("residue field")(&e))?;
        let lf = LocalField::new(res, cfg.precision as i32);
        // T f at the circle R+2 is evaluated through neighbours two circles further out.
        let tree = Tree::new(lf, vertex, cfg.radius + 4).map_err(|e| core("tree")(&e))?;
        let gamma = Gamma::new(&tree).map_err(|e| core("reduction group")(&e))?;
        let (k, catalog, catalog_bytes) = load_or_build_catalog(cfg, &gamma, false)?;
        let space = CosetSpace::new(tree, gamma, cfg.radius).map_err(|e| core("coset space")(&e))?;
        Ok(Context { cfg: cfg.clone(), vertex, space, k, catalog, catalog_bytes })
    }

    pub fn gamma(&self) -> &Gamma {
        self.space.gamma()
    }

    pub fn tree(&self) -> &Tree {
        self.space.tree()
    }

    pub fn q(&self) -> u64 {
        self.cfg.q()
    }

    pub fn info(&self) -> CatalogInfo {
        CatalogInfo {
            vertex: self.vertex.to_string(),
            k: self.k,
            entries: self.catalog.len(),
            dims: self.catalog.iter().map(|r| r.dim).collect(),
            sha256: codec::sha256_hex(&self.catalog_bytes),
        }
    }

    fn check(&self, suite: &str, name: &str, statement: &str) -> CheckBuilder {
        CheckBuilder::new(suite, name, statement).vertex(self.vertex)
    }

    fn sigma_check(&self, suite: &str, name: &str, statement: &str, sigma: &IrredRep) -> CheckBuilder {
        let mut b = self.check(suite, name, statement).sigma(sigma.weight_id);
        b.value("dim", sigma.dim);
        b
    }
}

fn requested_k(cfg: &RunConfig) -> u32 {
    cfg.coeff_ext.unwrap_or(cfg.residue_degree())
}

/// Path of the cached catalog for this configuration.
pub fn catalog_path(cfg: &RunConfig, vertex: Vertex) -> Result<PathBuf, RunError> {
    let field = Field::with_degree(cfg.p, requested_k(cfg)).map_err(|e| core("coefficient field")(&e))?;
    let header = Header::new(cfg.p, cfg.f, &field, vertex, cfg.seed);
    let filter = serde_json::to_string(&cfg.sigma).expect("serializable");
    let key = codec::sha256_hex(format!("{}|{filter}", header.hash()).as_bytes());
    Ok(cfg.catalog_dir.join(format!("catalog-{}-{}.uhk", vertex, &key[..16])))
}

/// The filtered catalog, from the cache file when present. With `write` the
/// encoded catalog is stored in the cache.
pub fn load_or_build_catalog(cfg: &RunConfig, gamma: &Gamma, write: bool) -> Result<(u32, Vec<IrredRep>, Vec<u8>), RunError> {
    let path = catalog_path(cfg, gamma.vertex())?;
    if let Ok(bytes) = std::fs::read(&path) {
        let (header, reps) = codec::decode(&bytes, gamma, CHOP_ATTEMPTS)?;
        return Ok((header.k, reps, bytes));
    }
    let (k, reps) = build_catalog_escalating(gamma, requested_k(cfg), cfg.seed, CHOP_ATTEMPTS, MAX_ESCALATIONS)
        .map_err(|e| core("catalog")(&e))?;
    let reps: Vec<IrredRep> = reps.into_iter().filter(|r| cfg.sigma.accepts(r.weight_id, r.dim)).collect();
    let field = reps.first().map_or_else(|| Field::with_degree(cfg.p, k).map_err(|e| core("coefficient field")(&e)), |r| Ok(r.field().clone()))?;
    let header = Header::new(cfg.p, cfg.f, &field, gamma.vertex(), cfg.seed);
    let bytes = codec::encode(&header, &reps.iter().collect::<Vec<_>>());
    if write {
        std::fs::create_dir_all(&cfg.catalog_dir).map_err(|e| RunError::Io { path: cfg.catalog_dir.clone(), msg: e.to_string() })?;
        std::fs::write(&path, &bytes).map_err(|e| RunError::Io { path: path.clone(), msg: e.to_string() })?;
    }
    Ok((k, reps, bytes))
}

/// Runs `f` on every item, spread over the available cores; results keep the item order.
pub fn fan_out<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| s.spawn(move || items.iter().enumerate().skip(w).step_by(workers).map(|(i, x)| (i, f(x))).collect::<Vec<_>>()))
            .collect();
        let mut out: Vec<(usize, R)> = handles.into_iter().flat_map(|h| h.join().expect("worker")).collect();
        out.sort_by_key(|p| p.0);
        out.into_iter().map(|p| p.1).collect()
    })
}

/// Runs the configured suites for every selected vertex.
pub fn run(cfg: &RunConfig) -> Result<Report, RunError> {
    let mut report = Report::new(cfg.clone());
    let mut suites = cfg.suites.clone();
    if cfg.oracle && !suites.contains(&Suite::Oracle) {
        suites.push(Suite::Oracle);
    }
    let mut trees = serde_json::Map::new();
    let mut bases = Vec::new();
    for v in cfg.vertex.vertices() {
        let ctx = Context::new(cfg, v)?;
        report.catalogs.push(ctx.info());
        for s in &suites {
            let checks = match s {
                Suite::Group => group_suite(&ctx),
                Suite::Tree => {
                    let (checks, shells) = tree_suite(&ctx);
                    if let Some(shells) = shells {
                        trees.insert(v.to_string(), shells);
                    }
                    checks
                }
                Suite::Algebra => algebra_suite(&ctx),
                Suite::Hecke => hecke_suite(&ctx),
                Suite::Freeness => {
                    let (checks, basis) = freeness_suite(&ctx);
                    bases.extend(basis);
                    checks
                }
                Suite::Oracle => oracle_suite(&ctx),
            };
            report.checks.extend(checks);
        }
    }
    if let Some(path) = &cfg.emit_tree {
        write_json(path, &serde_json::Value::Object(trees))?;
    }
    if let Some(path) = &cfg.emit_basis {
        write_json(path, &serde_json::Value::Array(bases))?;
    }
    Ok(report)
}

pub fn write_json(path: &PathBuf, v: &serde_json::Value) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| RunError::Io { path: path.clone(), msg: e.to_string() })
}

fn fmt(f: &Field, x: Fe) -> String {
    f.format(x)
}

pub fn group_suite(ctx: &Context) -> Vec<Check> {
    let mut out = Vec::new();
    let mut b = ctx.check("group", "identity_2_1", "n(x,y) = n(ȳ⁻¹x, y⁻¹) h(ȳ⁻¹) n′(−ȳ⁻¹x̄, y⁻¹) β for valid (x, y), y ≠ 0");
    let lf = LocalField::new(ctx.tree().lf().residue_field().clone(), 20.max(ctx.cfg.precision as i32));
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let mut passed = 0;
    for _ in 0..200 {
        let (x, y) = lf.random_valid_xy(&mut rng, 20);
        match lf.verify_identity_2_1(&x, &y) {
            Ok(true) => passed += 1,
            Ok(false) => {
                b.require(false, || format!("x = {}, y = {}", lf.format(&x), lf.format(&y)));
            }
            Err(e) => {
                b.require(false, || e.to_string());
            }
        }
    }
    b.value("samples", 200).value("passed", passed);
    out.push(b.finish());

    let mut b = ctx.check("group", "levels", "N ∩ I₁ = N_{n_K} and N′ ∩ I₁ = N′_{m_K}");
    let (nk, mk) = (ctx.tree().nk(), ctx.tree().mk());
    let (onk, omk) = oracle::nk_mk_by_reduction(ctx.tree(), ctx.gamma());
    b.value("n_K", nk).value("m_K", mk).value("oracle", (onk, omk));
    b.require((nk, mk) == (onk, omk), || format!("scan gives ({nk}, {mk}), reduction gives ({onk}, {omk})"));
    out.push(b.finish());
    out
}

pub fn tree_suite(ctx: &Context) -> (Vec<Check>, Option<serde_json::Value>) {
    let mut out = Vec::new();
    let q = ctx.q();
    let want = oracle::q_pow_c(q, ctx.vertex) as usize + 1;
    let mut b = ctx.check("tree", "degree", "the base vertex has q^{c_v} + 1 neighbours");
    match ctx.tree().degree(&utree_core::group::GroupElem::identity()) {
        Ok(d) => {
            b.value("degree", d).value("expected", want);
            b.require(d == want, || format!("degree {d}"));
        }
        Err(e) => {
            b.require(false, || e.to_string());
        }
    }
    out.push(b.finish());

    let mut b = ctx.check("tree", "shells", "ball enumeration is collision free with biregular shell sizes");
    let formula: Vec<usize> = oracle::biregular_shells(q, ctx.vertex, ctx.cfg.radius).into_iter().map(|x| x as usize).collect();
    let mut emitted = None;
    match ctx.tree().enumerate_ball(ctx.cfg.radius) {
        Ok(ball) => {
            b.value("shells", &ball.shell_sizes).value("expected", &formula);
            b.require(ball.shell_sizes == formula, || format!("shells {:?}", ball.shell_sizes));
            if ctx.cfg.emit_tree.is_some() {
                let lf = ctx.tree().lf();
                let mut shells: Vec<Vec<String>> = vec![Vec::new(); ctx.cfg.radius as usize + 1];
                for r in &ball.reps {
                    shells[r.radius as usize].push(r.describe(lf));
                }
                emitted = Some(json!({ "radius": ctx.cfg.radius, "shell_sizes": ball.shell_sizes, "shells": shells }));
            }
        }
        Err(e) => {
            b.require(false, || e.to_string());
        }
    }
    out.push(b.finish());
    (out, emitted)
}

fn selected(ctx: &Context) -> impl Iterator<Item = &IrredRep> {
    ctx.catalog.iter()
}

pub fn algebra_suite(ctx: &Context) -> Vec<Check> {
    let gamma = ctx.gamma();
    let q = ctx.q();
    let mut out = Vec::new();

    let mut b = ctx.check("algebra", "gamma_order", "|Γ_K| is |U(3)(F_q)| at K₀ and |U(1,1)(F_q) × U(1)(F_q)| at K₁");
    let want = oracle::gamma_order(q, ctx.vertex) as usize;
    b.value("order", gamma.order()).value("expected", want);
    b.require(gamma.order() == want, || format!("order {}", gamma.order()));
    out.push(b.finish());

    let mut b = ctx.check("algebra", "catalog_size", "the catalog has one weight per p-regular class of Γ_K");
    let classes = gamma.p_regular_classes();
    b.value("classes", classes).value("entries", ctx.catalog.len());
    if ctx.cfg.sigma == crate::config::SigmaFilter::All {
        b.require(classes == ctx.catalog.len(), || format!("{} weights, {classes} classes", ctx.catalog.len()));
    }
    out.push(b.finish());

    let reps: Vec<&IrredRep> = selected(ctx).collect();
    let checks = fan_out(&reps, |sigma| {
        let f = sigma.field();
        let mut b = ctx.sigma_check("algebra", "weight", "σ is irreducible, σ^𝕌 and σ_𝕌′ are lines and λ_σ is 0 unless dim σ = 1", sigma);
        b.require(sigma.module.verify_certificate(f, &sigma.certificate), || "certificate does not verify".into());
        let inv = sigma.invariants(gamma, &gamma.unipotent()).len();
        let coinv = sigma.coinvariant_dim(gamma);
        b.value("invariants", inv).value("coinvariants", coinv).value("lambda", fmt(f, sigma.lambda));
        b.require(inv == 1, || format!("dim σ^𝕌 = {inv}"));
        b.require(coinv == 1, || format!("dim σ_𝕌′ = {coinv}"));
        let want = if sigma.dim > 1 { Fe::ZERO } else { sigma.action(gamma, gamma.beta_k()).get(0, 0) };
        b.require(sigma.lambda == want, || format!("λ = {}", fmt(f, sigma.lambda)));
        b.finish()
    });
    out.extend(checks);

    let mut b = ctx.check("algebra", "pairwise_distinct", "catalog entries are pairwise non-isomorphic");
    for (i, a) in reps.iter().enumerate() {
        for c in &reps[i + 1..] {
            if a.dim == c.dim && a.is_isomorphic(&c.module) {
                b.require(false, || format!("σ{} ≅ σ{}", a.weight_id, c.weight_id));
            }
        }
    }
    out.push(b.finish());

    let radius = ctx.cfg.radius;
    let checks = fan_out(&reps, |sigma| {
        let h = Hecke::new(&ctx.space, sigma);
        let f = sigma.field();
        let mut v = Vec::new();

        let mut b = ctx.sigma_check("algebra", "bi_equivariant_line", "functions in H(σ) supported on K α^n K form a line", sigma);
        let mut dims = Vec::new();
        for n in 0..=radius {
            match h.verify_bi_equivariant_line(n) {
                Ok(d) => {
                    dims.push(d);
                    b.require(d == 1, || format!("n = {n}: dimension {d}"));
                }
                Err(e) => {
                    b.require(false, || e.to_string());
                }
            }
        }
        b.value("dims", dims);
        v.push(b.finish());

        let mut b = ctx.sigma_check("algebra", "convolution", "φ₁ ∗ φ_n = φ_{n+1} + c φ_n with c = 0 when dim σ > 1", sigma);
        let mut coeffs = Vec::new();
        for n in 1..=radius + 1 {
            match h.convolve(&HeckeElem::phi(1), &HeckeElem::phi(n)) {
                Ok(prod) => {
                    coeffs.push((n, fmt(f, prod.coeff(n))));
                    let support_ok = prod.coeffs.keys().all(|&l| l == n || l == n + 1);
                    b.require(support_ok && prod.coeff(n + 1) == Fe::ONE, || format!("n = {n}: {:?}", prod.coeffs));
                    b.require(sigma.dim == 1 || prod.coeff(n).is_zero(), || format!("n = {n}: c = {}", fmt(f, prod.coeff(n))));
                }
                Err(e) => {
                    b.require(false, || e.to_string());
                }
            }
        }
        b.value("c_n", coeffs);
        v.push(b.finish());

        let mut b = ctx.sigma_check("algebra", "sigma_one", "the N′_{m_K}/N′_{m_K+1} sub-sum has q^{4−c_K} equal terms and vanishes", sigma);
        let want = q.pow(4 - ctx.vertex.c()) as usize;
        match h.sigma_one(2, 1) {
            Ok(s) => {
                b.value("count", s.count).value("expected", want).value("all_equal", s.all_equal);
                b.require(s.count == want, || format!("{} terms", s.count));
                b.require(s.all_equal, || "terms differ".into());
                b.require(s.sum.is_zero(), || "sum is nonzero".into());
            }
            Err(e) => {
                b.require(false, || e.to_string());
            }
        }
        v.push(b.finish());
        v
    });
    out.extend(checks.into_iter().flatten());
    out
}

pub fn hecke_suite(ctx: &Context) -> Vec<Check> {
    let radius = ctx.cfg.radius;
    let space = &ctx.space;
    let mut out = Vec::new();

    for slice in (0..=radius).map(RSpace::Plus).chain((0..=radius).map(RSpace::Minus)) {
        let name = match slice {
            RSpace::Plus(n) => format!("support_plus_{n}"),
            RSpace::Minus(n) => format!("support_minus_{n}"),
        };
        let mut b = ctx.check("hecke", &name, "T maps R⁺_n into R⁺_{n−1} ⊕ R⁺_n ⊕ R⁺_{n+1} (R⁻_{−1} ⊕ R⁺_1 at n = 0) and R⁻_n into R⁻_{n−1} ⊕ R⁻_n ⊕ R⁻_{n+1}");
        let (side_radius, count) = match slice {
            RSpace::Plus(n) => (n, ctx.tree().plus_reps(n).len()),
            RSpace::Minus(n) => (n + 1, ctx.tree().minus_reps(n + 1).len()),
        };
        let stride = if side_radius > radius { count.div_ceil(PROPAGATION_SAMPLE) } else { 1 };
        match space.check_support_propagation(slice, stride) {
            Ok(rep) => {
                b.value("sources", rep.sources).value("checked", rep.checked);
                let targets: Vec<String> = rep.targets.keys().map(|(s, m)| format!("{s:?}({m})")).collect();
                b.value("targets", targets);
            }
            Err(e) => {
                b.require(false, || e.to_string());
            }
        }
        out.push(b.finish());
    }

    let reps: Vec<&IrredRep> = selected(ctx).collect();
    let checks = fan_out(&reps, |sigma| {
        let h = Hecke::new(space, sigma);
        let f = sigma.field();
        let mut b = ctx.sigma_check("hecke", "t_on_f_n", "T f₀ = f₋₁ + λ f₁ and T f_n = c_n f_n + f_{n±1}, c_n = 0 when dim σ > 1", sigma);
        if let Err(e) = h.check_tf0() {
            b.require(false, || e.to_string());
        }
        let mut cs = Vec::new();
        for n in (1..=radius as i32).flat_map(|n| [-n, n]) {
            match h.check_tfn(n) {
                Ok(c) => {
                    cs.push((n, fmt(f, c)));
                    b.require(sigma.dim == 1 || c.is_zero(), || format!("c_{n} = {}", fmt(f, c)));
                }
                Err(e) => {
                    b.require(false, || e.to_string());
                }
            }
        }
        b.value("c_n", cs);
        b.finish()
    });
    out.extend(checks);

    let mut b = ctx.check("hecke", "i1_action", "I_{1,K} permutes the cosets of B_R");
    let act = match space.i1_action(radius) {
        Ok(a) => {
            b.value("generators", a.gens.len());
            Some(a)
        }
        Err(e) => {
            b.require(false, || e.to_string());
            None
        }
    };
    out.push(b.finish());
    if let Some(act) = act {
        let checks = fan_out(&reps, |sigma| {
            let h = Hecke::new(space, sigma);
            let mut b = ctx.sigma_check("hecke", "i1_invariants", "the I_{1,K}-invariants of B_R have dimension 2R+1 and contain every f_n, |n| ≤ R", sigma);
            let inv = h.i1_invariants(&act);
            let want = 2 * radius as usize + 1;
            b.value("dim", inv.len()).value("expected", want);
            b.require(inv.len() == want, || format!("dimension {}", inv.len()));
            for n in -(radius as i32)..=radius as i32 {
                let ok = h.check_i1_invariance(&act, &h.f_n(n)) == Some(true);
                b.require(ok, || format!("f_{n} is not invariant"));
            }
            b.finish()
        });
        out.extend(checks);
    }
    out
}

fn basis_json(ctx: &Context, sigma: &IrredRep, basis: &free::FreeBasis) -> serde_json::Value {
    let f = sigma.field();
    let d = sigma.dim as u32;
    let a: Vec<Vec<Vec<(String, usize, String)>>> = basis
        .a
        .iter()
        .map(|an| {
            an.iter()
                .map(|v| v.0.iter().map(|&(i, x)| (ctx.space.rep(i / d).describe(ctx.tree().lf()), (i % d) as usize, fmt(f, x))).collect())
                .collect()
        })
        .collect();
    json!({
        "vertex": ctx.vertex.to_string(),
        "sigma": sigma.weight_id,
        "dim": sigma.dim,
        "radius": basis.radius,
        "sizes": basis.sizes(),
        "rank": basis.rank,
        "dim_ball": basis.dim_ball,
        "a": a,
    })
}

pub fn freeness_suite(ctx: &Context) -> (Vec<Check>, Option<serde_json::Value>) {
    let radius = ctx.cfg.radius;
    let reps: Vec<&IrredRep> = selected(ctx).collect();
    let results = fan_out(&reps, |sigma| {
        let h = Hecke::new(&ctx.space, sigma);
        let f = sigma.field();
        let mut v = Vec::new();
        let mut emitted = None;
        let ball = match BallSpace::new(&h, radius) {
            Ok(b) => b,
            Err(e) => {
                let mut b = ctx.sigma_check("freeness", "ball", "the coset space covers B_R", sigma);
                b.require(false, || e.to_string());
                return (vec![b.finish()], None);
            }
        };

        for n in 0..radius {
            let mut b = ctx.sigma_check("freeness", &format!("key_lemma_{n}"), "f ∈ B_{n+1} with (T f)|_{C_{n+2}} = 0 lies in B_n", sigma);
            match free::verify_key_lemma(&ball, n, ctx.cfg.sparse_budget) {
                Ok(rep) => {
                    b.value("dim_domain", rep.dim_domain).value("kernel_dim", rep.kernel_dim).value("expected", rep.expected);
                    b.require(rep.kernel_dim == rep.expected, || format!("kernel {} ≠ dim B_{n} = {}", rep.kernel_dim, rep.expected));
                }
                Err(FreeError::BudgetExceeded { dim, budget }) => {
                    b.skip(format!("dim B_{} = {dim} exceeds the sparse budget {budget}; see invariant_check_{n}", n + 1));
                }
                Err(e) => {
                    b.require(false, || e.to_string());
                }
            }
            v.push(b.finish());
        }

        for n in 0..=radius {
            let mut b = ctx.sigma_check("freeness", &format!("invariant_check_{n}"), "on span{f_{±(n+1)}} the C_{n+2}-component of T is f_{±(n+1)} ↦ f_{±(n+2)}", sigma);
            match free::key_lemma_invariant_check(&h, n) {
                Ok(rep) => {
                    for (a, c, ok) in &rep.combinations {
                        b.require(*ok, || format!("(a, b) = ({a}, {c})"));
                    }
                    b.value("combinations", rep.combinations.len());
                }
                Err(e) => {
                    b.require(false, || e.to_string());
                }
            }
            v.push(b.finish());
        }

        let r = (1..=radius).rev().find(|&r| ball.dim_ball(r) <= ctx.cfg.dense_budget);
        let mut b = ctx.sigma_check("freeness", "free_basis", "T^i A_k, k + i ≤ r, is a basis of B_r", sigma);
        let mut b2 = ctx.sigma_check("freeness", "quotient_growth", "T − λ is injective on B_{r−1} and dim B_r − rank = dim C_r", sigma);
        match r {
            None => {
                let why = format!("dim B_1 = {} exceeds the dense budget {}", ball.dim_ball(1), ctx.cfg.dense_budget);
                b.skip(why.clone());
                b2.skip(why);
            }
            Some(r) => {
                let small = BallSpace::new(&h, r).expect("r ≤ radius");
                b.value("radius", r);
                match free::construct_free_basis(&small) {
                    Ok(basis) => {
                        b.value("sizes", basis.sizes()).value("rank", basis.rank).value("dim_ball", basis.dim_ball);
                        b.require(basis.rank == basis.dim_ball, || format!("rank {} < {}", basis.rank, basis.dim_ball));
                        if ctx.cfg.emit_basis.is_some() && ctx.catalog.first().map(|c| c.weight_id) == Some(sigma.weight_id) {
                            emitted = Some(basis_json(ctx, sigma, &basis));
                        }
                    }
                    Err(e) => {
                        b.require(false, || e.to_string());
                    }
                }
                let want: Vec<usize> = (1..=r).map(|k| small.dim_circle(k)).collect();
                b2.value("radius", r).value("expected", &want);
                for lambda in [Fe::ZERO, Fe::ONE, f.generator()] {
                    match free::quotient_growth(&small, lambda) {
                        Ok(g) => {
                            b2.value(&format!("lambda_{}", fmt(f, lambda)), &g);
                            b2.require(g == want, || format!("λ = {}: {g:?}", fmt(f, lambda)));
                        }
                        Err(e) => {
                            b2.require(false, || e.to_string());
                        }
                    }
                }
            }
        }
        v.push(b.finish());
        v.push(b2.finish());
        (v, emitted)
    });
    let mut checks = Vec::new();
    let mut emitted = None;
    for (c, e) in results {
        checks.extend(c);
        emitted = emitted.or(e);
    }
    (checks, emitted)
}

pub fn oracle_suite(ctx: &Context) -> Vec<Check> {
    let radius = ctx.cfg.radius;
    let q = ctx.q();
    let mut out = Vec::new();

    let mut b = ctx.check("oracle", "shells_by_orbits", "K-orbits of α^{−m} L_K have the biregular shell sizes");
    let want: Vec<usize> = oracle::biregular_shells(q, ctx.vertex, radius).into_iter().map(|x| x as usize).collect();
    match oracle::shells_by_orbits(&ctx.space, radius) {
        Ok(s) => {
            b.value("shells", &s).value("expected", &want);
            b.require(s == want, || format!("{s:?}"));
        }
        Err(e) => {
            b.require(false, || e.to_string());
        }
    }
    out.push(b.finish());

    let mut b = ctx.check("oracle", "one_sided_orbits", "Plus(m) and Minus(m) agree with the one-parameter orbit sizes");
    for m in 1..=radius {
        let plus = ctx.tree().plus_reps(m).len();
        let minus = ctx.tree().minus_reps(m).len();
        match oracle::one_sided_orbits(&ctx.space, m) {
            Ok(o) => {
                b.value(&format!("m{m}"), (plus, minus));
                b.require(o == (plus, minus), || format!("m = {m}: orbits {o:?}, cosets ({plus}, {minus})"));
            }
            Err(e) => {
                b.require(false, || e.to_string());
            }
        }
    }
    out.push(b.finish());

    let mut b = ctx.check("oracle", "dense_key_lemma", "dense elimination gives the same kernel as the block method at n = 0");
    for sigma in selected(ctx).filter(|s| s.dim == 1).take(2) {
        let h = Hecke::new(&ctx.space, sigma);
        let ball = BallSpace::new(&h, radius).expect("radius");
        let dense = oracle::dense_key_lemma_kernel(&ball, 0);
        let block = free::verify_key_lemma(&ball, 0, ctx.cfg.sparse_budget);
        match (dense, block) {
            (Ok(k), Ok(rep)) => {
                b.value(&format!("sigma{}", sigma.weight_id), (k, rep.kernel_dim));
                b.require(k == rep.kernel_dim, || format!("σ{}: dense {k}, block {}", sigma.weight_id, rep.kernel_dim));
            }
            (Err(e), _) | (_, Err(e)) => {
                b.require(false, || e.to_string());
            }
        }
    }
    out.push(b.finish());
    out
}
