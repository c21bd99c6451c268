use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn vanet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vanet"))
        .args(args)
        .current_dir(dir)
        .env_remove("VF_SEED")
        .output()
        .expect("vanet runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn two_node_trace(dir: &Path) {
    let text = "$node_(0) set X_ 0.00\n$node_(0) set Y_ 0.00\n$node_(0) set Z_ 0.00\n\
                $node_(1) set X_ 20.00\n$node_(1) set Y_ 0.00\n$node_(1) set Z_ 0.00\n\
                $ns_ at 30.00 \"$node_(1) setdest 20.00 0.00 0.00\"\n";
    std::fs::write(dir.join("pair.tcl"), text).unwrap();
}

#[test]
fn genmap_grid_counts() {
    let dir = TempDir::new().unwrap();
    let o = vanet(dir.path(), &["genmap", "--grid", "3,100", "-o", "g.net"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "nodes 9 edges 24");
    let v = vanet(dir.path(), &["validate", "--network", "g.net"]);
    assert_eq!(code(&v), 0, "{}", stdout(&v));
}

#[test]
fn genmap_without_output_writes_the_network_to_stdout() {
    let dir = TempDir::new().unwrap();
    let o = vanet(dir.path(), &["genmap", "--spider", "3,1,50"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("nodes 4 edges 12"));
    std::fs::write(dir.path().join("s.net"), &o.stdout).unwrap();
    assert_eq!(code(&vanet(dir.path(), &["validate", "--network", "s.net"])), 0);
}

#[test]
fn invalid_generator_parameters_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&vanet(dir.path(), &["genmap", "--grid", "0,100"])), 2);
    assert_eq!(code(&vanet(dir.path(), &["genmap", "--spider", "2,1,50"])), 2);
    assert_eq!(code(&vanet(dir.path(), &["genmap", "--grid", "3"])), 2);
    assert_eq!(code(&vanet(dir.path(), &["genmap"])), 2);
}

#[test]
fn kml_import() {
    let dir = TempDir::new().unwrap();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let kml = data.join("campus.kml");
    let links = data.join("campus.links");
    let o = vanet(dir.path(), &["genmap", "--kml", kml.to_str().unwrap(), "--links", links.to_str().unwrap(), "-o", "c.net"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "nodes 5 edges 11");
}

#[test]
fn malformed_kml_exits_3() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.kml"), "<kml><Placemark>").unwrap();
    std::fs::write(dir.path().join("l.txt"), "").unwrap();
    assert_eq!(code(&vanet(dir.path(), &["genmap", "--kml", "bad.kml", "--links", "l.txt"])), 3);
}

#[test]
fn mobility_needs_a_demand_source() {
    let dir = TempDir::new().unwrap();
    vanet(dir.path(), &["genmap", "--grid", "3,100", "-o", "g.net"]);
    let o = vanet(dir.path(), &["mobility", "--map", "g.net", "-o", "t.tcl"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing demand"), "{}", stderr(&o));
}

#[test]
fn mobility_trace_validates() {
    let dir = TempDir::new().unwrap();
    vanet(dir.path(), &["genmap", "--grid", "4,120", "--lights", "-o", "g.net"]);
    let o = vanet(
        dir.path(),
        &["mobility", "--map", "g.net", "--random-walks", "15", "--duration", "90", "--seed", "2", "-o", "t.tcl", "--mapping", "t.map"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("nodes 15 "), "{}", stdout(&o));
    let v = vanet(dir.path(), &["validate", "--network", "g.net", "--trace", "t.tcl"]);
    assert_eq!(code(&v), 0, "{}", stdout(&v));
    let mapping = std::fs::read_to_string(dir.path().join("t.map")).unwrap();
    assert_eq!(mapping.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).count(), 15);
}

#[test]
fn unparsable_map_exits_3() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.net"), "node zero\n").unwrap();
    let o = vanet(dir.path(), &["mobility", "--map", "bad.net", "--random-trips", "3"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn rwp_trace() {
    let dir = TempDir::new().unwrap();
    let o = vanet(dir.path(), &["mobility", "--rwp", "n=150,w=2000,h=2000,dur=100", "-o", "r.tcl"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("nodes 150 "));
    assert_eq!(code(&vanet(dir.path(), &["mobility", "--rwp", "n=5,w=100"])), 2);
}

#[test]
fn clean_two_node_link_delivers_everything() {
    let dir = TempDir::new().unwrap();
    two_node_trace(dir.path());
    let o = vanet(dir.path(), &["netsim", "pair.tcl", "--flow", "0,1,0,10", "--sigma", "0", "--log", "log.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("n=2.56 σ=0.0 dB"), "{out}");
    assert!(out.trim_end().ends_with("sent 40 received 40 PDR 1.00"), "{out}");
    let log = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert_eq!(log.lines().count(), 41);
}

#[test]
fn netsim_echoes_radio_parameters() {
    let dir = TempDir::new().unwrap();
    two_node_trace(dir.path());
    let o = vanet(dir.path(), &["netsim", "pair.tcl", "--flow", "0,1"]);
    assert_eq!(code(&o), 0);
    let header = stdout(&o).lines().next().unwrap().to_string();
    assert!(header.starts_with("# nodes 2 flows 1 duration 30 s seed 1"), "{header}");
    assert!(header.contains("n=2.56 σ=4.0 dB"), "{header}");
}

#[test]
fn netsim_input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    two_node_trace(dir.path());
    assert_eq!(code(&vanet(dir.path(), &["netsim", "pair.tcl", "--flow", "0,7"])), 2);
    assert_eq!(code(&vanet(dir.path(), &["netsim", "pair.tcl", "--sources", "2"])), 2);
    assert_eq!(code(&vanet(dir.path(), &["netsim", "pair.tcl", "--flow", "0,1", "--sigma", "-1"])), 2);
    assert_eq!(code(&vanet(dir.path(), &["netsim", "missing.tcl", "--flow", "0,1"])), 2);
}

#[test]
fn malformed_trace_exits_3() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.tcl"), "$node_(0) set X_ abc\n").unwrap();
    assert_eq!(code(&vanet(dir.path(), &["netsim", "bad.tcl", "--flow", "0,1"])), 3);
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    vanet(dir.path(), &["mobility", "--rwp", "n=6,w=300,h=300,dur=30", "-o", "r.tcl"]);
    let run = |seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_vanet"));
        cmd.args(["netsim", "r.tcl", "--sources", "2"]).current_dir(dir.path()).env_remove("VF_SEED");
        if let Some(s) = seed {
            cmd.env("VF_SEED", s);
        }
        stdout(&cmd.output().unwrap()).lines().next().unwrap().to_string()
    };
    assert!(run(None).contains("seed 1 "));
    assert!(run(Some("9")).contains("seed 9 "));
    let explicit = stdout(&vanet(dir.path(), &["netsim", "r.tcl", "--sources", "2", "--seed", "9"]));
    assert_eq!(explicit.lines().next().unwrap(), run(Some("9")));
}

#[test]
fn config_errors() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("broken.json"), "{ \"seeds\": [1, ").unwrap();
    assert_eq!(code(&vanet(dir.path(), &["experiment", "--config", "broken.json"])), 3);
    let no_seeds = r#"{"map": {"source": "grid", "k": 3, "block_len": 100.0},
        "demand": {"source": "random_trips", "n": 10, "window": [0.0, 5.0]}, "seeds": []}"#;
    std::fs::write(dir.path().join("empty.json"), no_seeds).unwrap();
    assert_eq!(code(&vanet(dir.path(), &["experiment", "--config", "empty.json"])), 2);
    let v = vanet(dir.path(), &["validate", "--config", "empty.json"]);
    assert_eq!(code(&v), 1, "{}", stdout(&v));
}

#[test]
fn validate_reports_broken_networks() {
    let dir = TempDir::new().unwrap();
    let text = "node 0 0 0 junction\nnode 1 10 0 junction\nedge 0 0 1 5 13.9 1 0\n";
    std::fs::write(dir.path().join("short.net"), text).unwrap();
    let v = vanet(dir.path(), &["validate", "--network", "short.net"]);
    assert_eq!(code(&v), 1, "{}", stdout(&v));
    assert_eq!(code(&vanet(dir.path(), &["validate"])), 2);
}

#[test]
fn experiment_writes_its_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{
        "map": {"source": "grid", "k": 3, "block_len": 100.0},
        "demand": {"source": "random_trips", "n": 10, "window": [0.0, 5.0]},
        "rwp": {"n_nodes": 10, "width": 200.0, "height": 200.0},
        "flows": {"n_sources": [1, 2]},
        "seeds": [1, 2],
        "duration": 30.0
    }"#;
    std::fs::write(dir.path().join("tiny.json"), cfg).unwrap();
    let o = vanet(dir.path(), &["experiment", "--config", "tiny.json", "-o", "out"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["results.csv", "aggregate.csv", "fig12.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let fig = std::fs::read_to_string(dir.path().join("out/fig12.csv")).unwrap();
    assert_eq!(fig.lines().count(), 3);
    let results = std::fs::read_to_string(dir.path().join("out/results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 2 * 2 * 2);
}
