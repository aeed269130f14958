use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pseudolabel"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

const SMALL: &str = "epochs = 3\ne_i = 0\ne_f = 2\nbatch_size = 8\nbase_width = 2\nimage_size = 8\n\
                     gen_labeled = 16\ngen_unlabeled = 30\ngen_val = 8\ngen_test = 8\npositive_fraction = 0.25\n";

#[test]
fn gen_data_is_rerunnable_to_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = run(&["gen-data", "--task", "seg", "--n", "64", "--classes", "10", "--seed", "1", "--outdir", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = files(&dir.path().join("a"));
    assert_eq!(a, files(&dir.path().join("b")));
    assert_eq!(a.iter().filter(|(p, _)| p.starts_with("images")).count(), 64);
    assert_eq!(a.iter().filter(|(p, _)| p.starts_with("masks")).count(), 64);
    let manifest = fs::read_to_string(dir.path().join("a/manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 65);
}

#[test]
fn train_cls_twice_gives_identical_metrics() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), SMALL).unwrap();
    for out in ["r1", "r2"] {
        let o = run(&["train-cls", "--config", "c.cfg", "--seed", "3", "--outdir", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(dir.path().join("r1/metrics.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("r2/metrics.csv")).unwrap());
    assert_eq!(
        fs::read(dir.path().join("r1/ckpt_final")).unwrap(),
        fs::read(dir.path().join("r2/ckpt_final")).unwrap()
    );
    let resolved = fs::read_to_string(dir.path().join("r1/resolved_config.cfg")).unwrap();
    assert!(resolved.contains("seed = 3\n"));

    // the resolved config alone reproduces the run
    let o = run(&["train-cls", "--config", "r1/resolved_config.cfg", "--outdir", "r3"], dir.path());
    assert!(o.status.success());
    assert_eq!(a, fs::read(dir.path().join("r3/metrics.csv")).unwrap());

    let o = run(&["report", "--outdir", "r1"], dir.path());
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("Training log (3 epochs)"));
}

#[test]
fn alpha_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), format!("{SMALL}alpha_f = 1\n")).unwrap();
    let o = run(&["train-cls", "--config", "c.cfg", "--alpha-f", "0", "--outdir", "r"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("r/metrics.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!((cols[1], cols[5]), ("0", "0"), "{line}");
    }
}

#[test]
fn train_seg_writes_iou_table_and_switches_optimizer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "epochs = 3\ne_i = 1\ne_f = 2\nbatch_size = 4\nbase_width = 2\nimage_size = 8\nn_classes = 10\n\
               gen_labeled = 6\ngen_unlabeled = 20\ngen_val = 2\ngen_test = 2\n";
    fs::write(dir.path().join("s.cfg"), cfg).unwrap();
    let o = run(&["train-seg", "--config", "s.cfg", "--outdir", "r"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let iou = fs::read_to_string(dir.path().join("r/per_class_iou.csv")).unwrap();
    assert!(iou.starts_with("model,Background,Building Flooded,Building Non-Flooded,Road Flooded,Road Non-Flooded,Water,Tree,Vehicle,Pool,Grass,mIoU\n"));
    let opts: Vec<String> = fs::read_to_string(dir.path().join("r/metrics.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().to_string())
        .collect();
    assert_eq!(opts, ["adam", "adam", "sgd"]);
}

#[test]
fn eval_of_untrained_classifier_is_near_chance() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["gen-data", "--task", "cls", "--n", "4", "--test", "200", "--positive-fraction", "0.5", "--seed", "2", "--outdir", "d"],
        dir.path(),
    );
    assert!(o.status.success());
    let o = run(&["eval", "--task", "cls", "--data", "d/manifest.csv", "--seed", "5", "--outdir", "e"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("e/eval.json")).unwrap()).unwrap();
    let acc = json["accuracy"].as_f64().unwrap();
    assert!((0.35..=0.65).contains(&acc), "accuracy {acc}");
}

#[test]
fn eval_reloads_a_trained_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.cfg"), SMALL).unwrap();
    assert!(run(&["train-cls", "--config", "c.cfg", "--outdir", "r"], dir.path()).status.success());
    let o = run(&["eval", "--config", "c.cfg", "--checkpoint", "r/ckpt_final"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("r/summary.json")).unwrap()).unwrap();
    assert_eq!(json, summary["test_final"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("bad.cfg"), "e_i = 135\ne_f = 10\n").unwrap();
    let o = run(&["train-cls", "--config", "bad.cfg"], p);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("e_i < e_f violated"));

    fs::write(p.join("unknown.cfg"), "colour = red\n").unwrap();
    let o = run(&["train-cls", "--config", "unknown.cfg"], p);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    assert_eq!(run(&["train-cls", "--config", "missing.cfg"], p).status.code(), Some(2));
    assert_eq!(run(&["train-cls", "--data", "nowhere/manifest.csv"], p).status.code(), Some(2));
    assert_eq!(run(&["train-cls", "--bogus-flag"], p).status.code(), Some(1));
    assert_eq!(run(&["report", "--outdir", "nothing-here"], p).status.code(), Some(2));

    fs::write(p.join("c.cfg"), SMALL).unwrap();
    let o = run(&["train-cls", "--config", "c.cfg", "--set", "lr=1e300", "--outdir", "r"], p);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run(&["--help"], p).status.success());
}
