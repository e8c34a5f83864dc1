use std::path::Path;
use std::process::{Command, Output};

use maxsr::imaging::{load_image, rgb_to_ycbcr, save_image, upscale, ycbcr_to_rgb, ColorSpace, Image, Method};
use maxsr::network::checkpoint;
use maxsr::{ActivationKind, Network, Preset};

fn maxsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxsr")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_images(dir: &Path, n: usize, size: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        let img = Image::from_fn(size, size + 4, ColorSpace::Rgb, |c, y, x| {
            0.5 + 0.4 * ((y as f64 * (0.2 + 0.03 * i as f64)).sin() * (x as f64 * 0.17 + c as f64).cos())
        })
        .unwrap();
        save_image(&img, dir.join(format!("img{i}.png"))).unwrap();
    }
}

#[test]
fn params_of_each_preset() {
    for (args, want) in [
        (vec!["--preset", "espcn-mu", "--scale", "4"], "13232"),
        (vec!["--preset", "vdsr-mu", "--scale", "4"], "338192"),
        (vec!["--preset", "dnsr", "--scale", "4"], "132560"),
        (vec!["--preset", "toy", "--activation", "relu"], "7096"),
        (vec!["--activation", "mu"], "6000"),
        (vec!["--activation", "mu-d"], "6400"),
    ] {
        let mut a = vec!["params"];
        a.extend(args);
        let o = maxsr(&a);
        assert!(o.status.success());
        assert_eq!(stdout(&o).trim(), want, "{a:?}");
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let o = maxsr(&["params", "--config", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        seen += 1;
    }
    assert!(seen >= 8);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(maxsr(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(maxsr(&["params", "--width", "many"]).status.code(), Some(2));
    assert_eq!(maxsr(&["params", "--preset", "srcnn"]).status.code(), Some(2));
    let o = maxsr(&["train", "--train-dir", "/definitely/not/here"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/definitely/not/here"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "preset = toy\nlearning_rate = 1\n").unwrap();
    let o = maxsr(&["params", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("learning-rate"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "activation = relu\nwidth = 8\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(stdout(&maxsr(&["params", "--config", c])).trim(), "3584");
    assert_eq!(stdout(&maxsr(&["params", "--config", c, "--width", "12"])).trim(), "7096");
}

#[test]
fn gradcheck_single_toy_network() {
    let o = maxsr(&["gradcheck", "--activation", "mu-s", "--width", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn train_is_reproducible_and_feeds_eval() {
    let dir = tempfile::tempdir().unwrap();
    let train_dir = dir.path().join("train");
    let test_dir = dir.path().join("test");
    write_images(&train_dir, 3, 24);
    write_images(&test_dir, 2, 20);
    let run = |out: &str| {
        let out = dir.path().join(out);
        let o = maxsr(&[
            "train",
            "--activation",
            "mu",
            "--width",
            "8",
            "--scale",
            "2",
            "--crop",
            "12",
            "--iters",
            "30",
            "--seed",
            "5",
            "--deterministic",
            "--train-dir",
            train_dir.to_str().unwrap(),
            "--test-dir",
            test_dir.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = run("a");
    let b = run("b");
    let ck = "checkpoints/iter-00000030.mxsr";
    assert_eq!(std::fs::read(a.join(ck)).unwrap(), std::fs::read(b.join(ck)).unwrap());
    let log = std::fs::read_to_string(a.join("logs/train.log")).unwrap();
    assert_eq!(log, std::fs::read_to_string(b.join("logs/train.log")).unwrap());
    assert!(log.lines().next().unwrap().starts_with("iter 30 loss "));
    assert!(a.join("reports/run-config.txt").exists());
    assert!(a.join("reports/eval-test-iter-00000030.csv").exists());

    let o = maxsr(&[
        "eval",
        "--checkpoint",
        a.join(ck).to_str().unwrap(),
        "--test-dir",
        test_dir.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("mean"));

    let o = maxsr(&[
        "eval",
        "--baseline",
        "bicubic",
        "--scale",
        "2",
        "--test-dir",
        test_dir.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(a.join("reports/eval-test-x2-bicubic.csv").exists());

    let o = maxsr(&[
        "sparsity",
        "--checkpoint",
        a.join(ck).to_str().unwrap(),
        "--input",
        test_dir.join("img0.png").to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("layer 4 mu"));
    let grid = load_image(a.join("reports/sparsity-img0.pgm")).unwrap();
    assert_eq!((grid.height(), grid.width()), (4 * 8, 5 * 8));
}

#[test]
fn upscale_with_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    let mut net = Network::build(Preset::toy(ActivationKind::Relu, 4), 2, 0).unwrap();
    for p in net.params_mut() {
        p.weights.iter_mut().for_each(|w| *w = 0.0);
    }
    let ck = dir.path().join("zero.mxsr");
    checkpoint::save(&ck, &net, None).unwrap();
    let input = dir.path().join("in.png");
    let lr = Image::from_fn(6, 8, ColorSpace::Rgb, |c, y, x| ((3 * c + 5 * y + 7 * x) % 11) as f64 / 10.0).unwrap();
    save_image(&lr, &input).unwrap();
    let output = dir.path().join("out.png");
    let o = maxsr(&[
        "upscale",
        "--checkpoint",
        ck.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let lr = load_image(&input).unwrap();
    let ycc = rgb_to_ycbcr(&lr).unwrap();
    let y = upscale(&ycc.channel(0).quantized(), 2, Method::Nearest).unwrap();
    let cb = upscale(&ycc.channel(1), 2, Method::Bicubic).unwrap();
    let cr = upscale(&ycc.channel(2), 2, Method::Bicubic).unwrap();
    let want = ycbcr_to_rgb(&Image::from_planes(ColorSpace::YCbCr, &[y, cb, cr]).unwrap()).unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let want_path = dir2.path().join("want.png");
    save_image(&want, &want_path).unwrap();
    assert_eq!(load_image(&output).unwrap(), load_image(&want_path).unwrap());
}

#[test]
fn sweep_writes_table_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_images(&data, 2, 16);
    let out = dir.path().join("out");
    let o = maxsr(&[
        "sweep",
        "--kinds",
        "relu,mu",
        "--widths",
        "4,8",
        "--seeds",
        "0",
        "--scale",
        "2",
        "--crop",
        "8",
        "--iters",
        "3",
        "--train-dir",
        data.to_str().unwrap(),
        "--test-dir",
        data.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("reports/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(out.join("reports/sweep.dat").exists());
}
