use std::io::Write;
use std::process::{Command, Output, Stdio};

fn mmfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmfuse"))
        .args(args)
        .env_remove("MMFUSE_CONFIG")
        .env_remove("MMFUSE_PORT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn simulate_tables_print_csv() {
    for (table, header) in [
        ("2", "gesture,wrong_or_missed_pct,correct_pct"),
        ("3", "command,wrong_output_pct,correct_pct"),
        (
            "4",
            "fusion_operation,block_50,block_100,block_150,block_200,error_pct,variance",
        ),
    ] {
        let o = mmfuse(&["simulate", "--table", table, "--seed", "3"]);
        assert!(o.status.success());
        let out = stdout(&o);
        assert_eq!(out.lines().next(), Some(header));
        assert_eq!(out.lines().filter(|l| !l.starts_with('#')).count(), 6);
        assert_eq!(
            out,
            stdout(&mmfuse(&["simulate", "--table", table, "--seed", "3"]))
        );
    }
}

#[test]
fn trials_flag_changes_block_size() {
    let out = stdout(&mmfuse(&["simulate", "--table", "4", "--trials", "10"]));
    assert!(out.starts_with("fusion_operation,block_10,block_20,block_30,block_40,"));
}

#[test]
fn calibrate_one_operation() {
    let o = mmfuse(&["calibrate", "--op", "fist"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2);
    assert!(out.contains("Move Down & Fist,0.1360,0.2250,0.0400,0.9108,"));
}

#[test]
fn validation_failures_exit_2() {
    assert_eq!(
        mmfuse(&["calibrate", "--op", "thumbs up"]).status.code(),
        Some(2)
    );
    assert_eq!(mmfuse(&["simulate", "--table", "5"]).status.code(), Some(2));
    assert_eq!(
        mmfuse(&["simulate", "--table", "2", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "version = 9\n").unwrap();
    let o = mmfuse(&[
        "--config",
        bad.to_str().unwrap(),
        "simulate",
        "--table",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("version"));
}

#[test]
fn config_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(
        &path,
        "version = 1\n[speech.commands.move_left]\np_correct = 1.0\n",
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mmfuse"))
        .args(["simulate", "--table", "3"])
        .env("MMFUSE_CONFIG", &path)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("move left,0.0,100.0"));
}

#[test]
fn report_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = mmfuse(&["report", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    for f in [
        "table2.csv",
        "table3.csv",
        "table4.csv",
        "summary.md",
        "fused_errors.svg",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn repl_session() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_mmfuse"))
        .arg("repl")
        .env_remove("MMFUSE_CONFIG")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"g fist\ng none\ntick 200\ns \"move down\"\nfly\nquit\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("FUSED 0 PIN3 GESTURE"));
    assert!(out.contains("arm: PIN3 base 90 -> 95"));
    assert!(out.contains("FUSED 200 PIN3 SPEECH"));
    assert!(out.contains("arm: PIN3 base 95 -> 100"));
    assert!(out.contains("commands: g <gesture|none>"));
}

#[test]
fn serve_handles_one_connection() {
    use std::io::{BufRead, BufReader};
    use std::net::TcpStream;

    // find a free port, then hand it to the server through the environment
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_mmfuse"))
        .args(["serve", "--connections", "1"])
        .env("MMFUSE_PORT", port.to_string())
        .env_remove("MMFUSE_CONFIG")
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut banner = String::new();
    BufReader::new(child.stdout.as_mut().unwrap())
        .read_line(&mut banner)
        .unwrap();
    assert!(banner.contains(&format!(":{port}")));

    let mut stream = TcpStream::connect(("127.0.0.1", port)).unwrap();
    stream
        .write_all(b"HELLO mmfuse/1\nEVT GESTURE 1 50 DOUBLE_TAP\nBYE\n")
        .unwrap();
    let lines: Vec<String> = BufReader::new(stream).lines().map(Result::unwrap).collect();
    assert_eq!(
        lines,
        ["HELLO mmfuse/1", "ACK 1", "FUSED 50 PIN10 GESTURE", "BYE"]
    );
    assert!(child.wait().unwrap().success());
}
