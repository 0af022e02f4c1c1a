use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aderdg_core::analysis::global_errors;
use aderdg_core::integrator::{solve_ivp, IntegratorOptions};
use aderdg_core::problems::get_problem;
use aderdg_core::TimeMesh;

fn aderdg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aderdg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn tables_json_lists_gauss_nodes() {
    let o = aderdg(&["tables", "--degree", "1", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let nodes: Vec<f64> = v["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let s = 3f64.sqrt() / 6.0;
    assert!((nodes[0] - (0.5 - s)).abs() < 1e-15 && (nodes[1] - (0.5 + s)).abs() < 1e-15);
    assert_eq!(v["B"].as_array().unwrap().len(), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tables degree=1"));
}

#[test]
fn extended_tables_print_forty_digits() {
    let o = aderdg(&[
        "tables",
        "--degree",
        "1",
        "--format",
        "json",
        "--precision",
        "extended",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["precision"], "bigfloat40");
    let text = stdout(&o);
    assert!(
        text.contains("2.113248654051871177454256097490212721762e-1"),
        "{text}"
    );
}

#[test]
fn solve_csv_round_trips_node_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.csv");
    let o = aderdg(&[
        "solve",
        "--problem",
        "harm_osc",
        "--degree",
        "2",
        "--mesh",
        "uniform:10:0:6.283185307179586",
        "--subnodes",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    for key in ["rhs_evals=", "jac_evals=", "elements=10", "wall="] {
        assert!(err.contains(key), "{err}");
    }
    let rows = csv(&out);
    assert_eq!(rows[0], ["t", "u_1", "u_2", "kind"]);
    assert_eq!(rows.len(), 1 + 11 + 40);
    let times: Vec<f64> = rows[1..].iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(times.windows(2).all(|w| w[1] > w[0]));

    let spec = get_problem::<f64>("harm_osc", &BTreeMap::new()).unwrap();
    let mesh = TimeMesh::parse("uniform:10:0:6.283185307179586").unwrap();
    let traj = solve_ivp(&spec.problem, &mesh, &IntegratorOptions::new(2)).unwrap();
    let (node, _) = global_errors(&traj, &spec.problem, 4).unwrap();
    let mut linf: f64 = 0.0;
    for r in rows[1..].iter().filter(|r| r[3] == "node") {
        let t: f64 = r[0].parse().unwrap();
        let exact = spec.problem.exact(t).unwrap();
        for k in 0..2 {
            linf = linf.max((r[1 + k].parse::<f64>().unwrap() - exact[k]).abs());
        }
    }
    assert!((linf - node.linf).abs() <= 1e-12);
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let o = aderdg(&[
            "solve",
            "--problem",
            "third2",
            "--degree",
            "3",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        fs::read(p).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn converge_report_has_fixed_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = aderdg(&[
        "converge",
        "--problem",
        "harm_osc",
        "--degree",
        "1",
        "--meshes",
        "6,11,16,21,26,31",
        "--jobs",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["degree"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
    for key in ["L1", "L2", "Linf"] {
        assert!(v["rows"][0]["eG"][key].is_f64());
        assert!(v["rows"][0]["eL"][key].is_f64());
    }
    let p = v["orders"]["node"]["L1"].as_f64().unwrap();
    assert!((p - 2.90).abs() <= 0.3, "{p}");
    assert_eq!(v["theoretical"]["node"], 3);
    assert_eq!(v["theoretical"]["local"], 2);

    let serial = dir.path().join("serial.json");
    let o = aderdg(&[
        "converge",
        "--problem",
        "harm_osc",
        "--degree",
        "1",
        "--meshes",
        "6,11,16,21,26,31",
        "--out",
        serial.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&serial).unwrap());
}

#[test]
fn stability_ray_and_raster() {
    let dir = tempfile::tempdir().unwrap();
    let ray = dir.path().join("ray.csv");
    let o = aderdg(&[
        "stability",
        "--degree",
        "3",
        "--ray",
        "1",
        "--radii",
        "log:1e-2:1e8:21",
        "--out",
        ray.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = csv(&ray);
    assert_eq!(rows[0], ["r", "absR"]);
    assert_eq!(rows.len(), 22);
    let last: f64 = rows[21][1].parse().unwrap();
    assert!(last < 1e-6);

    let raster = dir.path().join("raster.csv");
    let o = aderdg(&[
        "stability",
        "--degree",
        "2",
        "--window",
        "-4:0:-2:2",
        "--res",
        "5:3",
        "--out",
        raster.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let rows = csv(&raster);
    assert_eq!(rows[0], ["re", "im", "absR"]);
    assert_eq!(rows.len(), 16);
    assert!(rows[1..]
        .iter()
        .all(|r| r[2].parse::<f64>().unwrap() <= 1.0 + 1e-12));
}

#[test]
fn exit_codes_distinguish_failures() {
    assert_eq!(
        aderdg(&["solve", "--problem", "nope", "--degree", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        aderdg(&[
            "stability",
            "--degree",
            "1",
            "--radii",
            "log:1:2",
            "--ray",
            "1"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        aderdg(&["converge", "--problem", "flame", "--degree", "1"])
            .status
            .code(),
        Some(2)
    );
    let o = aderdg(&[
        "solve",
        "--problem",
        "flame",
        "--param",
        "delta=1e-4",
        "--degree",
        "2",
        "--mesh",
        "uniform:2:0:20000",
        "--solver",
        "picard",
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = aderdg(&[
        "tables",
        "--degree",
        "1",
        "--out",
        "/nonexistent-dir/t.json",
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn run_reads_toml_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flame.csv");
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "command = \"solve\"\nproblem = \"flame\"\ndegree = 4\nmesh = \"graded:10:0:80,200:80:120,10:120:200\"\n\
             solver = \"newton\"\nsubnodes = 0\nout = \"{}\"\n[params]\ndelta = 0.01\n",
            out.display()
        ),
    )
    .unwrap();
    let o = aderdg(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv(&out);
    assert_eq!(rows.len(), 1 + 221);
    let last: f64 = rows[221][1].parse().unwrap();
    assert!((last - 1.0).abs() < 1e-6);

    fs::write(&cfg, "command = \"solve\"\ndegree = 2\n").unwrap();
    assert_eq!(
        aderdg(&["run", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        aderdg(&["run", "--config", "/nonexistent/run.toml"])
            .status
            .code(),
        Some(4)
    );
}

#[test]
fn problems_list_names_all_problems() {
    let o = aderdg(&["problems", "list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in aderdg_core::problems::PROBLEM_NAMES {
        assert!(text.contains(name));
    }
}
