use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::thread;

use mmfuse::fusion::FusionConfig;
use mmfuse::server::{serve, Server, Session, Transcript};

struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Client {
    fn connect(addr: std::net::SocketAddr) -> Self {
        let writer = TcpStream::connect(addr).unwrap();
        Self {
            reader: BufReader::new(writer.try_clone().unwrap()),
            writer,
        }
    }

    /// Sends one line and reads `replies` lines back.
    fn send(&mut self, line: &str, replies: usize) -> Vec<String> {
        writeln!(self.writer, "{line}").unwrap();
        (0..replies)
            .map(|_| {
                let mut s = String::new();
                self.reader.read_line(&mut s).unwrap();
                s.trim_end().to_string()
            })
            .collect()
    }
}

fn client_lines(t: &Transcript) -> String {
    t.lines
        .iter()
        .filter_map(|l| l.strip_prefix("C: "))
        .map(|l| format!("{l}\n"))
        .collect()
}

#[test]
fn interleaved_clients_get_independent_sessions() {
    let server = Server::bind("127.0.0.1:0", FusionConfig::default(), 77).unwrap();
    let addr = server.local_addr().unwrap();
    let handle = thread::spawn(move || server.run(Some(2)).unwrap());

    let mut a = Client::connect(addr);
    assert_eq!(a.send("HELLO mmfuse/1", 1), ["HELLO mmfuse/1"]);
    let mut b = Client::connect(addr);
    assert_eq!(b.send("HELLO mmfuse/1", 1), ["HELLO mmfuse/1"]);

    // a's gesture miss must not open a window for b's speech
    assert_eq!(a.send("EVT GESTURE 1 0 NONE", 1), ["ACK 1"]);
    assert_eq!(
        b.send("EVT GESTURE 1 0 WAVE_OUT", 2),
        ["ACK 1", "FUSED 0 PIN5 GESTURE"]
    );
    assert_eq!(b.send("EVT SPEECH 2 400 \"move up\"", 1), ["ACK 2"]);
    assert_eq!(
        a.send("EVT SPEECH 2 400 \"move up\"", 2),
        ["ACK 2", "FUSED 400 PIN9 SPEECH"]
    );
    // seq numbering is per connection
    assert_eq!(
        b.send("EVT GESTURE 3 9000 FIST", 2),
        ["ACK 3", "FUSED 9000 PIN3 GESTURE"]
    );
    assert_eq!(a.send("BYE", 1), ["BYE"]);
    assert_eq!(b.send("BYE", 1), ["BYE"]);

    let transcripts = handle.join().unwrap();
    assert_eq!(transcripts.len(), 2);
    for t in &transcripts {
        assert_eq!(t.count_received("EVT"), t.count_sent("ACK"));
    }
    let fused: Vec<Vec<&str>> = transcripts.iter().map(|t| t.fused_lines()).collect();
    assert!(fused.contains(&vec!["FUSED 400 PIN9 SPEECH"]));
    assert!(fused.contains(&vec!["FUSED 0 PIN5 GESTURE", "FUSED 9000 PIN3 GESTURE"]));
}

#[test]
fn replayed_transcript_gives_identical_fused_bytes() {
    let script = "HELLO mmfuse/1\nEVT GESTURE 1 0 NONE\nEVT SPEECH 2 700 \"move gripper\"\n\
                  EVT SPEECH 3 5000 \"move left\"\nEVT GESTURE 4 5200 WAVE_IN\nEVT GESTURE 5 9000 NONE\n\
                  EVT SPEECH 6 9100 \"override\"\nBYE\n";
    let cfg = FusionConfig::with_uniform_detection(0.5).unwrap();
    let run = |input: &str| {
        let mut session = Session::new(cfg.clone(), 3);
        let mut out = Vec::new();
        let t = serve(input.as_bytes(), &mut out, &mut session).unwrap();
        (t, out)
    };
    let (first, first_bytes) = run(script);
    let (second, second_bytes) = run(&client_lines(&first));
    assert_eq!(first_bytes, second_bytes);
    assert_eq!(first.fused_lines(), second.fused_lines());
    assert_eq!(
        first.fused_lines(),
        ["FUSED 700 PIN10 SPEECH", "FUSED 5200 PIN4 GESTURE"]
    );
}
