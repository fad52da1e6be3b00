use std::path::{Path, PathBuf};

use drawseg::graph::{load_graph, save_graph, ClassScheme, ComponentClass, ComponentGraph};
use drawseg::nn::{compute_metrics, confusion_matrix, format_report, train_with, Metrics, Model};
use drawseg::pipeline::{label_graph, vectorize};
use drawseg::raster::{load_color, load_gray};
use drawseg::svg::{graph_to_svg, save_svg};
use drawseg::synth::{generate_corpus, load_index, CorpusIndex, INDEX_FILE};
use serde::{Deserialize, Serialize};

use crate::config::{write_json, PipelineConfig};
use crate::{CliError, Command};

const GRAPH_SUFFIX: &str = ".graph.json";
const LABELS_SUFFIX: &str = ".labels.json";
const LABELS_VERSION: u32 = 1;

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Synth { count, seed, out } => {
            let index = generate_corpus(count, seed, &out)?;
            println!("wrote {} drawings to {}", index.rows.len(), out.display());
            Ok(())
        }
        Command::Vectorize {
            input,
            gt,
            out,
            svg,
            config,
        } => {
            let cfg = config.resolve()?;
            if input.is_dir() {
                if gt.is_some() || svg.is_some() {
                    return Err(CliError::Usage("--gt and --svg apply to a single drawing".into()));
                }
                let index = load_index(&input)?;
                std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
                for (stem, g) in corpus_graphs(&input, &index, &cfg)? {
                    save_graph(&g, &out.join(format!("{stem}{GRAPH_SUFFIX}")))?;
                }
                println!("wrote {} graphs to {}", index.rows.len(), out.display());
                return Ok(());
            }
            let g = vectorize_file(&input, gt.as_deref(), &cfg)?;
            save_graph(&g, &out)?;
            if let Some(p) = svg {
                save_svg(&graph_to_svg(&g, None, 2.0)?, &p)?;
            }
            println!("{} nodes, {} edges", g.node_count(), g.edges.len());
            Ok(())
        }
        Command::Train {
            data,
            out,
            history,
            config,
        } => cmd_train(&data, &out, history, &config.resolve()?),
        Command::Predict { graph, model, out, svg } => cmd_predict(&graph, &model, &out, svg.as_deref()),
        Command::Eval {
            pred,
            truth,
            confusion,
            task,
            out,
        } => {
            let task: Task = task.parse()?;
            let (conf, names) = match confusion {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
                    let conf: ConfusionFile = serde_json::from_str(&text)
                        .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
                    let conf = conf.into_matrix();
                    let names = task.names_for(conf.len());
                    (conf, names)
                }
                None => {
                    let (pred, truth) = (pred.expect("clap requires pred"), truth.expect("clap requires truth"));
                    (eval_confusion(&pred, &truth, task)?, task.names_for(task.num_classes()))
                }
            };
            let metrics = compute_metrics(&conf)?;
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            print!("{}", format_report(&conf, &refs, &metrics));
            if let Some(p) = out {
                write_json(
                    &p,
                    &Report {
                        task: task.name(),
                        classes: names,
                        confusion: conf,
                        metrics,
                    },
                )?;
            }
            Ok(())
        }
        Command::Render {
            graph,
            labels,
            out,
            stroke_width,
        } => {
            let g = load_graph(&graph)?;
            let svg = match labels {
                Some(p) => {
                    let l = load_labels(&p)?;
                    if l.scheme != g.scheme {
                        return Err(CliError::Data(format!(
                            "labels use {:?}, graph uses {:?}",
                            l.scheme, g.scheme
                        )));
                    }
                    graph_to_svg(&g, Some(&l.labels), stroke_width)?
                }
                None => graph_to_svg(&g, None, stroke_width)?,
            };
            save_svg(&svg, &out)?;
            Ok(())
        }
    }
}

fn vectorize_file(drawing: &Path, gt: Option<&Path>, cfg: &PipelineConfig) -> Result<ComponentGraph, CliError> {
    let img = load_gray(drawing)?;
    let mut g = vectorize(&img, &cfg.vectorize())?.graph;
    g.provenance.source_image = Some(drawing.display().to_string());
    if let Some(gt) = gt {
        g = label_graph(&g, &load_color(gt)?, cfg.scheme)?;
        g.provenance.ground_truth_image = Some(gt.display().to_string());
    }
    Ok(g)
}

fn stem_of(file: &str) -> &str {
    file.split(['_', '.']).next().unwrap_or(file)
}

/// Vectorizes and labels every drawing of a corpus, in index order.
fn corpus_graphs(
    dir: &Path,
    index: &CorpusIndex,
    cfg: &PipelineConfig,
) -> Result<Vec<(String, ComponentGraph)>, CliError> {
    index
        .rows
        .iter()
        .map(|row| {
            let mut g = vectorize_file(&dir.join(&row.drawing), Some(&dir.join(&row.ground_truth)), cfg)?;
            g.provenance.source_image = Some(row.drawing.clone());
            g.provenance.ground_truth_image = Some(row.ground_truth.clone());
            g.provenance.seed = Some(row.seed);
            Ok((stem_of(&row.drawing).to_string(), g))
        })
        .collect()
}

/// Files in `dir` ending in `suffix`, sorted by name, keyed by the name without it.
fn list_suffixed(dir: &Path, suffix: &str) -> Result<Vec<(String, PathBuf)>, CliError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let entry = entry.map_err(|e| CliError::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(suffix) {
            out.push((stem.to_string(), entry.path()));
        }
    }
    out.sort();
    Ok(out)
}

fn load_dataset(data: &Path, cfg: &PipelineConfig) -> Result<Vec<ComponentGraph>, CliError> {
    let graphs: Vec<ComponentGraph> = if data.join(INDEX_FILE).is_file() {
        corpus_graphs(data, &load_index(data)?, cfg)?
            .into_iter()
            .map(|(_, g)| g)
            .collect()
    } else {
        list_suffixed(data, GRAPH_SUFFIX)?
            .iter()
            .map(|(_, p)| load_graph(p))
            .collect::<Result<_, _>>()?
    };
    graphs
        .iter()
        .map(|g| {
            if g.labels.is_none() {
                return Err(CliError::Data("training graphs must be labeled".into()));
            }
            g.with_scheme(cfg.scheme).map_err(|e| CliError::Data(e.to_string()))
        })
        .collect()
}

#[derive(Serialize)]
struct HistoryFile<'a> {
    config: &'a PipelineConfig,
    best_epoch: Option<usize>,
    best_val_accuracy: Option<f64>,
    #[serde(flatten)]
    history: &'a drawseg::nn::TrainHistory,
}

fn cmd_train(data: &Path, out: &Path, history: Option<PathBuf>, cfg: &PipelineConfig) -> Result<(), CliError> {
    let dataset = load_dataset(data, cfg)?;
    let mc = cfg.model()?;
    let (model, hist) = train_with(&dataset, &mc, &cfg.train(), |r| {
        if r.epoch % 100 == 0 {
            eprintln!("epoch {:>5}  loss {:.4}  val {:.4}", r.epoch, r.train_loss, r.val_accuracy);
        }
    })?;
    model.save(out)?;
    let hpath = history.unwrap_or_else(|| {
        let name = out.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
        out.with_file_name(format!("{name}.history.json"))
    });
    write_json(
        &hpath,
        &HistoryFile {
            config: cfg,
            best_epoch: model.best_epoch,
            best_val_accuracy: model.best_val_accuracy,
            history: &hist,
        },
    )?;
    println!(
        "trained {} on {} graphs; best validation accuracy {:.4} at epoch {}",
        cfg.preset,
        dataset.len(),
        model.best_val_accuracy.unwrap_or(f64::NAN),
        model.best_epoch.map_or("-".into(), |e| e.to_string())
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelsFile {
    version: u32,
    scheme: ClassScheme,
    labels: Vec<usize>,
}

fn load_labels(path: &Path) -> Result<LabelsFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let l: LabelsFile =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    if l.version != LABELS_VERSION {
        return Err(CliError::Data(format!(
            "{}: labels version {} (expected {LABELS_VERSION})",
            path.display(),
            l.version
        )));
    }
    if let Some(bad) = l.labels.iter().find(|&&c| c >= l.scheme.num_classes()) {
        return Err(CliError::Data(format!("{}: label {bad} out of range", path.display())));
    }
    Ok(l)
}

fn predict_one(model: &Model, graph: &Path, out: &Path) -> Result<ComponentGraph, CliError> {
    let mut g = load_graph(graph)?;
    if model.config.num_classes != g.scheme.num_classes() {
        // unlabeled graphs take the scheme of the model
        if g.labels.is_none() {
            g.scheme = match model.config.num_classes {
                2 => ClassScheme::TextNontext,
                _ => ClassScheme::TextContourDimension,
            };
        }
    }
    let labels = model.predict(&g)?;
    write_json(
        out,
        &LabelsFile {
            version: LABELS_VERSION,
            scheme: g.scheme,
            labels: labels.clone(),
        },
    )?;
    g.labels = Some(labels);
    Ok(g)
}

fn cmd_predict(graph: &Path, model: &Path, out: &Path, svg: Option<&Path>) -> Result<(), CliError> {
    let model = Model::load(model)?;
    if graph.is_dir() {
        if svg.is_some() {
            return Err(CliError::Usage("--svg applies to a single graph".into()));
        }
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let files = list_suffixed(graph, GRAPH_SUFFIX)?;
        for (stem, p) in &files {
            predict_one(&model, p, &out.join(format!("{stem}{LABELS_SUFFIX}")))?;
        }
        println!("wrote {} label files to {}", files.len(), out.display());
        return Ok(());
    }
    let g = predict_one(&model, graph, out)?;
    if let Some(p) = svg {
        save_svg(&graph_to_svg(&g, None, 2.0)?, p)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Task {
    Three,
    Text,
    Contour,
}

impl std::str::FromStr for Task {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "three" | "3" => Ok(Task::Three),
            "text" => Ok(Task::Text),
            "contour" => Ok(Task::Contour),
            other => Err(CliError::Usage(format!("unknown task {other:?}; use three, text or contour"))),
        }
    }
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Three => "three",
            Task::Text => "text",
            Task::Contour => "contour",
        }
    }

    fn num_classes(self) -> usize {
        if self == Task::Three {
            3
        } else {
            2
        }
    }

    fn names_for(self, k: usize) -> Vec<String> {
        let names: &[&str] = match (self, k) {
            (_, 3) => &["Contour", "Text", "Dimension"],
            (Task::Text, 2) => &["Text", "NonText"],
            (Task::Contour, 2) => &["Contour", "NonContour"],
            _ => return (0..k).map(|i| i.to_string()).collect(),
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Maps a label under `scheme` onto this task's classes.
    fn remap(self, scheme: ClassScheme, label: usize) -> Result<usize, CliError> {
        match (scheme, self) {
            (ClassScheme::TextContourDimension, Task::Three) => Ok(label),
            (ClassScheme::TextContourDimension, Task::Text) => {
                Ok(ClassScheme::TextNontext.index_of(ComponentClass::ALL[label]))
            }
            (ClassScheme::TextContourDimension, Task::Contour) => Ok(usize::from(label != 0)),
            (ClassScheme::TextNontext, Task::Text) => Ok(label),
            (ClassScheme::TextNontext, _) => Err(CliError::Data(format!(
                "2-class labels cannot be scored on the {} task",
                self.name()
            ))),
        }
    }
}

fn eval_confusion(pred: &Path, truth: &Path, task: Task) -> Result<Vec<Vec<u64>>, CliError> {
    let pairs: Vec<(PathBuf, PathBuf)> = if pred.is_dir() {
        let truths = list_suffixed(truth, GRAPH_SUFFIX)?;
        let preds = list_suffixed(pred, LABELS_SUFFIX)?;
        if preds.is_empty() {
            return Err(CliError::Data(format!("no *{LABELS_SUFFIX} files in {}", pred.display())));
        }
        preds
            .into_iter()
            .map(|(stem, p)| {
                truths
                    .iter()
                    .find(|(s, _)| *s == stem)
                    .map(|(_, t)| (p, t.clone()))
                    .ok_or_else(|| CliError::Data(format!("no ground-truth graph for {stem}")))
            })
            .collect::<Result<_, _>>()?
    } else {
        vec![(pred.to_path_buf(), truth.to_path_buf())]
    };
    let (mut all_t, mut all_p) = (Vec::new(), Vec::new());
    for (p, t) in &pairs {
        let l = load_labels(p)?;
        let g = load_graph(t)?;
        let truth_labels = g
            .labels
            .as_ref()
            .ok_or_else(|| CliError::Data(format!("{} has no labels", t.display())))?;
        if truth_labels.len() != l.labels.len() {
            return Err(CliError::Data(format!(
                "{}: {} predictions for {} nodes",
                p.display(),
                l.labels.len(),
                truth_labels.len()
            )));
        }
        for (&a, &b) in truth_labels.iter().zip(&l.labels) {
            all_t.push(task.remap(g.scheme, a)?);
            all_p.push(task.remap(l.scheme, b)?);
        }
    }
    Ok(confusion_matrix(&all_t, &all_p, task.num_classes())?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ConfusionFile {
    Bare(Vec<Vec<u64>>),
    Wrapped { confusion: Vec<Vec<u64>> },
}

impl ConfusionFile {
    fn into_matrix(self) -> Vec<Vec<u64>> {
        match self {
            ConfusionFile::Bare(m) | ConfusionFile::Wrapped { confusion: m } => m,
        }
    }
}

#[derive(Serialize)]
struct Report {
    task: &'static str,
    classes: Vec<String>,
    confusion: Vec<Vec<u64>>,
    metrics: Metrics,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_remaps() {
        let s3 = ClassScheme::TextContourDimension;
        let t: Vec<usize> = (0..3).map(|l| Task::Text.remap(s3, l).unwrap()).collect();
        assert_eq!(t, vec![1, 0, 1]);
        let c: Vec<usize> = (0..3).map(|l| Task::Contour.remap(s3, l).unwrap()).collect();
        assert_eq!(c, vec![0, 1, 1]);
        assert_eq!(Task::Text.remap(ClassScheme::TextNontext, 1).unwrap(), 1);
        assert!(Task::Three.remap(ClassScheme::TextNontext, 0).is_err());
        assert_eq!(stem_of("0012_draw.png"), "0012");
    }

    #[test]
    fn config_defaults_match_library() {
        assert_eq!(PipelineConfig::default().vectorize(), drawseg::pipeline::VectorizeConfig::default());
    }
}
