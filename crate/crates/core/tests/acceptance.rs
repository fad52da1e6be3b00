//! Acceptance checks, one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::time::Instant;

use drawseg::curvefit::{fit_rms, CubicBezier, Point};
use drawseg::graph::{feature_dim, featurize, normalize_components, ClassScheme, ComponentClass, ComponentGraph};
use drawseg::nn::{
    compute_metrics, confusion_matrix, softmax_cross_entropy, train, DenseMatrix, GraphStructure,
    Model, ModelConfig, Preset, TrainConfig, TrainHistory,
};
use drawseg::pipeline::{label_graph, vectorize, VectorizeConfig};
use drawseg::raster::binarize;
use drawseg::skeleton::{skeletonize, ThinningMethod};
use drawseg::synth::render::Canvas;
use drawseg::synth::{generate_seeded, Drawing};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CORPUS: usize = 200;
const BENCH_EPOCHS: usize = 300;
const BENCH_SEED: u64 = 0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn pct(v: f64) -> f64 {
    100.0 * v
}

fn metrics_arithmetic() -> Outcome {
    let t = Instant::now();
    let conf = vec![vec![4238, 130, 710], vec![105, 9229, 273], vec![761, 352, 9589]];
    let m = compute_metrics(&conf).unwrap();
    let want_p = [83.03, 95.04, 90.70];
    let want_r = [83.46, 96.07, 89.60];
    let mut worst = (pct(m.accuracy) - 90.82).abs();
    for k in 0..3 {
        worst = worst.max((pct(m.precision[k].unwrap()) - want_p[k]).abs());
        worst = worst.max((pct(m.recall[k].unwrap()) - want_r[k]).abs());
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= 0.005 && secs < 1.0,
        format!("accuracy {:.4}%, worst deviation {worst:.4} pp, {secs:.3}s", pct(m.accuracy)),
    )
}

struct Corpus {
    drawings: Vec<Drawing>,
    graphs: Vec<ComponentGraph>,
}

fn build_corpus() -> Corpus {
    let cfg = VectorizeConfig::default();
    let drawings: Vec<Drawing> = (0..CORPUS as u64).map(|s| generate_seeded(s).unwrap()).collect();
    let graphs = drawings
        .iter()
        .map(|d| {
            let v = vectorize(&d.drawing, &cfg).unwrap();
            label_graph(&v.graph, &d.ground_truth, ClassScheme::TextContourDimension).unwrap()
        })
        .collect();
    Corpus { drawings, graphs }
}

fn feature_contract(c: &Corpus) -> Outcome {
    let nodes: usize = c.graphs.iter().map(|g| g.node_count()).sum();
    let bad: usize = c
        .graphs
        .iter()
        .flat_map(|g| &g.nodes)
        .filter(|n| n.features.len() != 19 || n.features.len() != feature_dim(4))
        .count();
    outcome(bad == 0, format!("{nodes} nodes over {} graphs, {bad} violations", c.graphs.len()))
}

fn skeleton_properties(c: &Corpus) -> Outcome {
    let t = Instant::now();
    let mut violations = 0;
    for d in &c.drawings {
        let mask = binarize(&d.drawing, 128);
        let skel = skeletonize(&mask, ThinningMethod::ZhangSuen);
        violations += usize::from(skel.has_full_2x2());
        violations += usize::from(skel.component_count() != mask.component_count());
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        violations == 0 && secs < 120.0,
        format!("{} masks, {violations} violations, {secs:.1}s", c.drawings.len()),
    )
}

/// Seeded straight segments and circular arcs, each drawn alone on a 1024 canvas.
fn fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (w, h) = (1024u32, 768u32);
    let cfg = VectorizeConfig::default();
    let (mut pass, mut total, mut worst) = (0, 0, 0.0f64);
    for i in 0..200 {
        let c = [rng.gen_range(300.0..724.0), rng.gen_range(250.0..518.0)];
        let pts: Vec<Point> = if i % 2 == 0 {
            let len = rng.gen_range(30.0..500.0);
            let a = rng.gen_range(0.0..PI);
            let d = [a.cos() * len / 2.0, a.sin() * len / 2.0];
            vec![[c[0] - d[0], c[1] - d[1]], [c[0] + d[0], c[1] + d[1]]]
        } else {
            let r = rng.gen_range(20.0..240.0);
            let span = rng.gen_range(15.0f64..=90.0).to_radians();
            let a0 = rng.gen_range(0.0..2.0 * PI);
            let steps = 256;
            (0..=steps)
                .map(|k| {
                    let a = a0 + span * k as f64 / steps as f64;
                    [c[0] + r * a.cos(), c[1] + r * a.sin()]
                })
                .collect()
        };
        let mut canvas = Canvas::new(w, h);
        canvas.stroke_polyline(&pts, false, 3.0, ComponentClass::Contour);
        let v = vectorize(&canvas.to_gray().unwrap(), &cfg).unwrap();
        for (t, curve) in v.traces.iter().zip(&v.curves) {
            let px: Vec<Point> = t.pixels.iter().map(|p| [p.0 as f64, p.1 as f64]).collect();
            let rms = fit_rms(curve, &px);
            worst = worst.max(rms);
            total += 1;
            pass += usize::from(rms <= 0.75);
        }
    }
    let rate = pass as f64 / total as f64;
    outcome(
        rate >= 0.95,
        format!("{pass}/{total} components within 0.75 px ({:.1}%), worst {worst:.3} px", pct(rate)),
    )
}

fn loss_of(m: &Model, x: &DenseMatrix, s: &GraphStructure, y: &[usize]) -> f64 {
    softmax_cross_entropy(&m.logits(x, s).unwrap(), y).unwrap().0
}

/// Entry `i` of weight matrix `w` of layer `l`, or of its bias when `w` is past the weights.
fn param_mut(m: &mut Model, l: usize, w: usize, i: usize) -> &mut f64 {
    let p = &mut m.params[l];
    match p.weights.get_mut(w) {
        Some(mat) => &mut mat.data_mut()[i],
        None => &mut p.bias[i],
    }
}

fn gradient_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = feature_dim(4);
    let x = DenseMatrix::from_vec(6, d, (0..6 * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let s = GraphStructure::from_edges(6, &[[0, 1], [1, 2], [2, 0], [2, 3], [4, 5]]).unwrap();
    let y = [0, 1, 2, 1, 0, 2];
    let h = 1e-5;
    let mut report = Vec::new();
    let mut ok = true;
    for preset in [Preset::Gs3, Preset::Gcn, Preset::Mlp] {
        let mut m = Model::new(preset.config(d, 3), 6).unwrap();
        let (logits, cache) = m.forward(&x, &s).unwrap();
        let (_, dl) = softmax_cross_entropy(&logits, &y).unwrap();
        let grads = m.backward(&s, &cache, &dl).unwrap();
        let mut worst = 0.0f64;
        for l in 0..m.params.len() {
            for w in 0..=m.params[l].weights.len() {
                let len = match m.params[l].weights.get(w) {
                    Some(mat) => mat.data().len(),
                    None => m.params[l].bias.len(),
                };
                for i in 0..len {
                    let orig = *param_mut(&mut m, l, w, i);
                    *param_mut(&mut m, l, w, i) = orig + h;
                    let lp = loss_of(&m, &x, &s, &y);
                    *param_mut(&mut m, l, w, i) = orig - h;
                    let lm = loss_of(&m, &x, &s, &y);
                    *param_mut(&mut m, l, w, i) = orig;
                    let num = (lp - lm) / (2.0 * h);
                    let ana = match grads[l].weights.get(w) {
                        Some(g) => g.data()[i],
                        None => grads[l].bias[i],
                    };
                    worst = worst.max((ana - num).abs() / ana.abs().max(num.abs()).max(1e-6));
                }
            }
        }
        ok &= worst < 1e-4;
        report.push(format!("{} {worst:.2e}", preset.name()));
    }
    outcome(ok, format!("max relative error: {}", report.join(", ")))
}

fn node_accuracy(m: &Model, graphs: &[&ComponentGraph]) -> f64 {
    let (mut hit, mut all) = (0, 0);
    for g in graphs {
        let y = m.predict(g).unwrap();
        let truth = g.labels.as_ref().unwrap();
        hit += y.iter().zip(truth).filter(|(a, b)| a == b).count();
        all += y.len();
    }
    hit as f64 / all as f64
}

fn overfit(c: &Corpus) -> Outcome {
    let t = Instant::now();
    let three: Vec<ComponentGraph> = c.graphs[..3].to_vec();
    let tc = TrainConfig {
        max_epochs: 2000,
        seed: 1,
        ..Default::default()
    };
    let mc = Preset::Gs3.config(feature_dim(4), 3);
    let (m, hist) = drawseg::nn::train_on(&three, &three, &mc, &tc).unwrap();
    let acc = node_accuracy(&m, &three.iter().collect::<Vec<_>>());
    let first = hist.epochs.iter().find(|e| e.val_accuracy == 1.0).map(|e| e.epoch);
    let secs = t.elapsed().as_secs_f64();
    let nodes: usize = three.iter().map(|g| g.node_count()).sum();
    outcome(
        acc == 1.0 && secs < 300.0,
        format!(
            "{nodes} nodes, train accuracy {:.2}% (first 100% at epoch {}), {secs:.1}s",
            pct(acc),
            first.map_or("-".into(), |e| e.to_string())
        ),
    )
}

struct Bench {
    history: TrainHistory,
    model: Model,
    three_class: f64,
    text: f64,
    confusion: Vec<Vec<u64>>,
}

/// Trains on the seeded split and scores the best checkpoint on the validation drawings.
fn bench(c: &Corpus, preset: Preset) -> Bench {
    let tc = TrainConfig {
        max_epochs: BENCH_EPOCHS,
        seed: BENCH_SEED,
        ..Default::default()
    };
    let mc: ModelConfig = preset.config(feature_dim(4), 3);
    let (model, history) = train(&c.graphs, &mc, &tc).unwrap();
    let (mut truth, mut pred) = (Vec::new(), Vec::new());
    for &i in &history.val_indices {
        let g = &c.graphs[i];
        truth.extend(g.labels.as_ref().unwrap());
        pred.extend(model.predict(g).unwrap());
    }
    let confusion = confusion_matrix(&truth, &pred, 3).unwrap();
    let three_class = compute_metrics(&confusion).unwrap().accuracy;
    let text_of = |l: usize| ComponentClass::ALL[l] == ComponentClass::Text;
    let text = truth.iter().zip(&pred).filter(|(a, b)| text_of(**a) == text_of(**b)).count() as f64
        / truth.len() as f64;
    Bench {
        history,
        model,
        three_class,
        text,
        confusion,
    }
}

fn benchmark(gs3: &Bench, mlp: &Bench, secs: f64) -> Outcome {
    let gap = pct(gs3.three_class - mlp.three_class);
    outcome(
        gs3.history.train_indices.len() == 160
            && gs3.history.val_indices.len() == 40
            && gs3.text >= 0.95
            && gs3.three_class >= 0.85
            && gap >= 3.0
            && secs <= 3600.0,
        format!(
            "GS3 text/non-text {:.2}%, 3-class {:.2}%; MLP 3-class {:.2}%; gap {gap:.2} pp; {} epochs, {secs:.0}s",
            pct(gs3.text),
            pct(gs3.three_class),
            pct(mlp.three_class),
            BENCH_EPOCHS
        ),
    )
}

fn determinism(a: &Bench, b: &Bench) -> Outcome {
    let same = a.history == b.history
        && a.model == b.model
        && a.confusion == b.confusion
        && a.three_class.to_bits() == b.three_class.to_bits()
        && a.text.to_bits() == b.text.to_bits();
    outcome(
        same,
        format!("{} epoch records compared, identical: {same}", a.history.epochs.len()),
    )
}

fn similarity_invariance(c: &Corpus) -> Outcome {
    let cfg = VectorizeConfig::default();
    let curves: Vec<CubicBezier> = vectorize(&c.drawings[0].drawing, &cfg).unwrap().curves[..100].to_vec();
    let moved: Vec<CubicBezier> = curves.iter().map(|b| b.transformed(3.7, [5.0, 9.0])).collect();
    let (a, _) = normalize_components(&curves).unwrap();
    let (b, _) = normalize_components(&moved).unwrap();
    let mut worst = 0.0f64;
    for (p, q) in a.iter().zip(&b) {
        for (u, v) in featurize(p, 4).iter().zip(featurize(q, 4)) {
            worst = worst.max((u - v).abs());
        }
    }
    outcome(worst <= 1e-9, format!("{} components, max feature difference {worst:.2e}", a.len()))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut record = |name, o: Outcome| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };
    record("1 metric arithmetic", metrics_arithmetic());
    let corpus = build_corpus();
    record("2 feature contract", feature_contract(&corpus));
    record("3 skeleton properties", skeleton_properties(&corpus));
    record("4 vectorization fidelity", fidelity());
    record("5 gradient checks", gradient_checks());
    record("6 overfit sanity", overfit(&corpus));
    let t = Instant::now();
    let gs3 = bench(&corpus, Preset::Gs3);
    let mlp = bench(&corpus, Preset::Mlp);
    record("7 synthetic benchmark", benchmark(&gs3, &mlp, t.elapsed().as_secs_f64()));
    let again = bench(&corpus, Preset::Gs3);
    record("8 determinism", determinism(&gs3, &again));
    record("9 similarity invariance", similarity_invariance(&corpus));
    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
