//! Synthetic flow records in the NSL-KDD file layout (41 features, label,
//! difficulty; no header).
//!
//! The generator exists so the whole pipeline can be exercised without the
//! real corpus. Families are loosely modelled on the originals: DoS and
//! probes are far from normal traffic, while R2L and U2R records mostly
//! look like ordinary sessions and differ in a handful of content features.
//! Some attack names appear only in the test file.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthKddConfig {
    pub train_rows: usize,
    pub test_rows: usize,
    pub seed: u64,
}

impl Default for SynthKddConfig {
    fn default() -> Self {
        SynthKddConfig {
            train_rows: 6000,
            test_rows: 3000,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Normal,
    Dos,
    Probe,
    R2l,
    U2r,
}

// Class mix, roughly the KDDTrain+ proportions with the rare families
// inflated so they are measurable at small sizes.
const TRAIN_MIX: [(Family, f64); 5] = [
    (Family::Normal, 0.52),
    (Family::Dos, 0.30),
    (Family::Probe, 0.10),
    (Family::R2l, 0.06),
    (Family::U2r, 0.02),
];
const TEST_MIX: [(Family, f64); 5] = [
    (Family::Normal, 0.43),
    (Family::Dos, 0.30),
    (Family::Probe, 0.11),
    (Family::R2l, 0.13),
    (Family::U2r, 0.03),
];

struct Row {
    v: [f64; 41],
    protocol: &'static str,
    service: &'static str,
    flag: &'static str,
    label: &'static str,
}

// Numeric column positions in the 41-feature layout (categoricals at 1..=3).
const DURATION: usize = 0;
const SRC_BYTES: usize = 4;
const DST_BYTES: usize = 5;
const WRONG_FRAGMENT: usize = 7;
const HOT: usize = 9;
const NUM_FAILED: usize = 10;
const LOGGED_IN: usize = 11;
const NUM_COMPROMISED: usize = 12;
const ROOT_SHELL: usize = 13;
const NUM_ROOT: usize = 15;
const NUM_FILE_CREATIONS: usize = 16;
const NUM_SHELLS: usize = 17;
const NUM_ACCESS_FILES: usize = 18;
const IS_GUEST: usize = 21;
const COUNT: usize = 22;
const SRV_COUNT: usize = 23;
const SERROR: usize = 24;
const SRV_SERROR: usize = 25;
const RERROR: usize = 26;
const SRV_RERROR: usize = 27;
const SAME_SRV: usize = 28;
const DIFF_SRV: usize = 29;
const SRV_DIFF_HOST: usize = 30;
const DH_COUNT: usize = 31;
const DH_SRV_COUNT: usize = 32;
const DH_SAME_SRV: usize = 33;
const DH_DIFF_SRV: usize = 34;
const DH_SAME_SRC_PORT: usize = 35;
const DH_SRV_DIFF_HOST: usize = 36;
const DH_SERROR: usize = 37;
const DH_SRV_SERROR: usize = 38;
const DH_RERROR: usize = 39;
const DH_SRV_RERROR: usize = 40;

fn rate(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    let v = Normal::new(mean, sd).expect("valid sd").sample(rng);
    (v.clamp(0.0, 1.0) * 100.0).round() / 100.0
}

fn bytes(rng: &mut ChaCha8Rng, mu: f64, sigma: f64) -> f64 {
    LogNormal::new(mu, sigma).expect("valid sigma").sample(rng).round()
}

fn normal_session(rng: &mut ChaCha8Rng) -> Row {
    let (protocol, service) = *[
        ("tcp", "http"),
        ("tcp", "http"),
        ("tcp", "http"),
        ("tcp", "smtp"),
        ("tcp", "ftp_data"),
        ("tcp", "ftp"),
        ("tcp", "telnet"),
        ("udp", "domain_u"),
        ("udp", "private"),
        ("icmp", "eco_i"),
        ("tcp", "other"),
    ]
    .choose(rng)
    .expect("non-empty");
    let mut v = [0.0; 41];
    let tcp = protocol == "tcp";
    v[DURATION] = if rng.gen_bool(0.9) { 0.0 } else { bytes(rng, 3.0, 1.5) };
    v[SRC_BYTES] = bytes(rng, 5.5, 1.0);
    v[DST_BYTES] = if tcp { bytes(rng, 7.5, 1.5) } else { bytes(rng, 4.5, 0.8) };
    v[LOGGED_IN] = f64::from(u8::from(tcp && rng.gen_bool(0.9)));
    v[HOT] = if rng.gen_bool(0.05) { rng.gen_range(1..4) as f64 } else { 0.0 };
    v[COUNT] = rng.gen_range(1..25) as f64;
    v[SRV_COUNT] = (v[COUNT] + rng.gen_range(0..10) as f64).round();
    v[SERROR] = if rng.gen_bool(0.03) { rate(rng, 0.5, 0.3) } else { 0.0 };
    v[SRV_SERROR] = v[SERROR];
    v[RERROR] = if rng.gen_bool(0.05) { rate(rng, 0.4, 0.3) } else { 0.0 };
    v[SRV_RERROR] = v[RERROR];
    v[SAME_SRV] = rate(rng, 0.95, 0.08);
    v[DIFF_SRV] = rate(rng, 0.03, 0.05);
    v[SRV_DIFF_HOST] = rate(rng, 0.1, 0.15);
    v[DH_COUNT] = rng.gen_range(1..256) as f64;
    v[DH_SRV_COUNT] = rng.gen_range(100..256) as f64;
    v[DH_SAME_SRV] = rate(rng, 0.85, 0.2);
    v[DH_DIFF_SRV] = rate(rng, 0.03, 0.05);
    v[DH_SAME_SRC_PORT] = rate(rng, 0.05, 0.1);
    v[DH_SRV_DIFF_HOST] = rate(rng, 0.03, 0.05);
    v[DH_SERROR] = rate(rng, 0.01, 0.03);
    v[DH_SRV_SERROR] = v[DH_SERROR];
    v[DH_RERROR] = rate(rng, 0.03, 0.08);
    v[DH_SRV_RERROR] = v[DH_RERROR];
    let flag = if tcp && rng.gen_bool(0.04) { "REJ" } else { "SF" };
    Row {
        v,
        protocol,
        service,
        flag,
        label: "normal",
    }
}

fn make(family: Family, test: bool, rng: &mut ChaCha8Rng) -> Row {
    match family {
        Family::Normal => normal_session(rng),
        Family::Dos => {
            let names: &[&str] = if test { &["neptune", "smurf", "apache2", "back"] } else { &["neptune", "smurf", "back", "teardrop"] };
            let label = *names.choose(rng).expect("non-empty");
            let mut r = normal_session(rng);
            r.label = label;
            let v = &mut r.v;
            match label {
                "smurf" => {
                    r.protocol = "icmp";
                    r.service = "ecr_i";
                    r.flag = "SF";
                    v[SRC_BYTES] = *[520.0, 1032.0].choose(rng).expect("non-empty");
                    v[DST_BYTES] = 0.0;
                    v[LOGGED_IN] = 0.0;
                    v[COUNT] = rng.gen_range(300..512) as f64;
                    v[SRV_COUNT] = v[COUNT];
                    v[SAME_SRV] = 1.0;
                    v[DH_COUNT] = 255.0;
                    v[DH_SRV_COUNT] = 255.0;
                    v[DH_SAME_SRV] = 1.0;
                    v[DH_SAME_SRC_PORT] = 1.0;
                }
                "teardrop" => {
                    r.protocol = "udp";
                    r.service = "private";
                    v[WRONG_FRAGMENT] = 3.0;
                    v[SRC_BYTES] = 28.0;
                    v[DST_BYTES] = 0.0;
                    v[COUNT] = rng.gen_range(50..150) as f64;
                }
                "back" | "apache2" => {
                    r.protocol = "tcp";
                    r.service = "http";
                    v[SRC_BYTES] = bytes(rng, 10.0, 0.3);
                    v[HOT] = rng.gen_range(2..8) as f64;
                    v[NUM_COMPROMISED] = rng.gen_range(0..3) as f64;
                    v[DH_SRV_COUNT] = rng.gen_range(10..120) as f64;
                    if label == "apache2" {
                        v[DURATION] = rng.gen_range(1..20) as f64;
                        r.flag = *["SF", "RSTR", "S3"].choose(rng).expect("non-empty");
                    }
                }
                _ => {
                    r.protocol = "tcp";
                    r.service = *["private", "http", "telnet", "ftp_data", "finger"].choose(rng).expect("non-empty");
                    r.flag = if rng.gen_bool(0.85) { "S0" } else { "REJ" };
                    v[SRC_BYTES] = 0.0;
                    v[DST_BYTES] = 0.0;
                    v[LOGGED_IN] = 0.0;
                    v[COUNT] = rng.gen_range(100..512) as f64;
                    v[SRV_COUNT] = rng.gen_range(1..30) as f64;
                    v[SERROR] = rate(rng, 0.98, 0.05);
                    v[SRV_SERROR] = v[SERROR];
                    v[SAME_SRV] = rate(rng, 0.06, 0.05);
                    v[DIFF_SRV] = rate(rng, 0.06, 0.03);
                    v[DH_COUNT] = 255.0;
                    v[DH_SRV_COUNT] = rng.gen_range(1..30) as f64;
                    v[DH_SAME_SRV] = rate(rng, 0.06, 0.05);
                    v[DH_SERROR] = rate(rng, 0.98, 0.05);
                    v[DH_SRV_SERROR] = v[DH_SERROR];
                }
            }
            r
        }
        Family::Probe => {
            let names: &[&str] = if test { &["satan", "portsweep", "ipsweep", "mscan"] } else { &["satan", "portsweep", "ipsweep", "nmap"] };
            let label = *names.choose(rng).expect("non-empty");
            let mut r = normal_session(rng);
            r.label = label;
            let v = &mut r.v;
            v[LOGGED_IN] = 0.0;
            v[DST_BYTES] = 0.0;
            v[SRC_BYTES] = if rng.gen_bool(0.7) { 0.0 } else { bytes(rng, 2.5, 1.0) };
            match label {
                "ipsweep" => {
                    r.protocol = "icmp";
                    r.service = "eco_i";
                    r.flag = "SF";
                    v[SRC_BYTES] = 18.0;
                    v[SRV_DIFF_HOST] = rate(rng, 1.0, 0.05);
                    v[DH_SRV_DIFF_HOST] = rate(rng, 0.6, 0.2);
                    v[DH_SAME_SRC_PORT] = rate(rng, 0.9, 0.1);
                }
                _ => {
                    r.protocol = "tcp";
                    r.service = *["private", "other", "ftp", "telnet", "finger", "http"].choose(rng).expect("non-empty");
                    r.flag = *["REJ", "RSTR", "RSTO", "S0", "SH"].choose(rng).expect("non-empty");
                    v[COUNT] = rng.gen_range(1..300) as f64;
                    v[RERROR] = rate(rng, 0.8, 0.25);
                    v[SRV_RERROR] = v[RERROR];
                    v[SAME_SRV] = rate(rng, 0.1, 0.1);
                    v[DIFF_SRV] = rate(rng, 0.7, 0.25);
                    v[DH_SRV_COUNT] = rng.gen_range(1..20) as f64;
                    v[DH_SAME_SRV] = rate(rng, 0.05, 0.05);
                    v[DH_DIFF_SRV] = rate(rng, 0.7, 0.25);
                    v[DH_RERROR] = rate(rng, 0.8, 0.2);
                    v[DH_SRV_RERROR] = v[DH_RERROR];
                    if label == "mscan" {
                        v[DURATION] = rng.gen_range(0..5) as f64;
                        v[DH_SRV_DIFF_HOST] = rate(rng, 0.4, 0.2);
                    }
                }
            }
            r
        }
        // Interactive sessions that look normal on traffic statistics.
        Family::R2l => {
            let names: &[&str] = if test {
                &["guess_passwd", "warezmaster", "snmpguess", "imap"]
            } else {
                &["guess_passwd", "warezclient", "ftp_write", "imap"]
            };
            let label = *names.choose(rng).expect("non-empty");
            let mut r = normal_session(rng);
            r.label = label;
            r.protocol = "tcp";
            let v = &mut r.v;
            match label {
                "guess_passwd" => {
                    r.service = "telnet";
                    r.flag = *["SF", "RSTO"].choose(rng).expect("non-empty");
                    v[NUM_FAILED] = 1.0;
                    v[LOGGED_IN] = 0.0;
                    v[SRC_BYTES] = bytes(rng, 4.8, 0.2);
                    v[DST_BYTES] = bytes(rng, 4.8, 0.3);
                }
                "warezclient" | "warezmaster" => {
                    r.service = if label == "warezclient" { "ftp_data" } else { "ftp" };
                    v[DURATION] = bytes(rng, 5.0, 1.0);
                    v[SRC_BYTES] = bytes(rng, 8.5, 1.2);
                    v[HOT] = rng.gen_range(1..12) as f64;
                    v[IS_GUEST] = f64::from(u8::from(rng.gen_bool(0.7)));
                    v[DH_COUNT] = rng.gen_range(1..40) as f64;
                    v[DH_SRV_COUNT] = rng.gen_range(1..40) as f64;
                }
                "snmpguess" => {
                    r.protocol = "udp";
                    r.service = "private";
                    v[SRC_BYTES] = bytes(rng, 3.7, 0.1);
                    v[DST_BYTES] = 0.0;
                    v[DH_COUNT] = 255.0;
                    v[DH_SRV_COUNT] = rng.gen_range(1..10) as f64;
                }
                _ => {
                    r.service = *["ftp", "imap4", "login"].choose(rng).expect("non-empty");
                    v[HOT] = rng.gen_range(1..6) as f64;
                    v[NUM_ACCESS_FILES] = rng.gen_range(0..2) as f64;
                    v[NUM_FILE_CREATIONS] = rng.gen_range(0..3) as f64;
                    v[DH_SAME_SRC_PORT] = rate(rng, 0.4, 0.3);
                }
            }
            r
        }
        Family::U2r => {
            let names: &[&str] = if test { &["buffer_overflow", "rootkit", "ps"] } else { &["buffer_overflow", "rootkit", "perl"] };
            let label = *names.choose(rng).expect("non-empty");
            let mut r = normal_session(rng);
            r.label = label;
            r.protocol = "tcp";
            r.service = *["telnet", "ftp_data", "login"].choose(rng).expect("non-empty");
            r.flag = "SF";
            let v = &mut r.v;
            v[LOGGED_IN] = 1.0;
            v[DURATION] = bytes(rng, 4.5, 1.0);
            v[HOT] = rng.gen_range(1..6) as f64;
            v[ROOT_SHELL] = f64::from(u8::from(rng.gen_bool(0.7)));
            v[NUM_ROOT] = rng.gen_range(0..4) as f64;
            v[NUM_FILE_CREATIONS] = rng.gen_range(0..4) as f64;
            v[NUM_SHELLS] = rng.gen_range(0..2) as f64;
            v[NUM_COMPROMISED] = rng.gen_range(0..3) as f64;
            v[COUNT] = rng.gen_range(1..4) as f64;
            v[SRV_COUNT] = v[COUNT];
            v[DH_COUNT] = rng.gen_range(1..30) as f64;
            v[DH_SRV_COUNT] = rng.gen_range(1..30) as f64;
            r
        }
    }
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn write_rows(path: &Path, n: usize, mix: &[(Family, f64)], test: bool, rng: &mut ChaCha8Rng) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let total: f64 = mix.iter().map(|m| m.1).sum();
    for _ in 0..n {
        let mut u = rng.gen::<f64>() * total;
        let mut family = mix[mix.len() - 1].0;
        for &(f, p) in mix {
            if u < p {
                family = f;
                break;
            }
            u -= p;
        }
        let r = make(family, test, rng);
        let mut fields: Vec<String> = Vec::with_capacity(43);
        fields.push(format_value(r.v[0]));
        fields.push(r.protocol.into());
        fields.push(r.service.into());
        fields.push(r.flag.into());
        fields.extend(r.v[4..].iter().map(|&v| format_value(v)));
        fields.push(r.label.into());
        fields.push(rng.gen_range(5..22).to_string());
        writeln!(w, "{}", fields.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write `KDDTrain+.txt` and `KDDTest+.txt` into `dir`.
pub fn write_synthetic_kdd(dir: &Path, cfg: &SynthKddConfig) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = seed::rng(seed::stream_seed(cfg.seed, "synth-train"));
    write_rows(&dir.join("KDDTrain+.txt"), cfg.train_rows, &TRAIN_MIX, false, &mut rng)?;
    let mut rng = seed::rng(seed::stream_seed(cfg.seed, "synth-test"));
    write_rows(&dir.join("KDDTest+.txt"), cfg.test_rows, &TEST_MIX, true, &mut rng)
}
