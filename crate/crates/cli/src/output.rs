//! Output files and the run manifests written next to them.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| data_err(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| data_err(path, e))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_hash(path: &Path) -> String {
    fs::read(path).map_or_else(|_| "unreadable".into(), |b| sha256_hex(&b))
}

/// Provenance for one run: arguments, seed, inputs and tool version.
pub struct Manifest {
    command: String,
    args: Vec<String>,
    seed: u64,
    threads: usize,
    inputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Manifest {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            seed,
            threads: rayon::current_num_threads(),
            inputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn render(&self, outputs: &[(&Path, &[u8])]) -> String {
        let mut out = String::from("# pathsim run manifest\n");
        out.push_str(&format!("version\t{}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("command\t{}\n", self.command));
        out.push_str(&format!("args\t{}\n", self.args.join(" ")));
        out.push_str(&format!("seed\t{}\n", self.seed));
        out.push_str(&format!("threads\t{}\n", self.threads));
        for p in &self.inputs {
            out.push_str(&format!("input\t{}\t{}\n", p.display(), file_hash(p)));
        }
        for (p, bytes) in outputs {
            out.push_str(&format!("output\t{}\t{}\n", p.display(), sha256_hex(bytes)));
        }
        out
    }

    /// Writes `path` and a `<name>.manifest.tsv` beside it.
    pub fn write_output(&self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        self.write_outputs(path, &[(path, bytes)])
    }

    /// Writes several outputs and one manifest at `manifest_for` plus
    /// `.manifest.tsv`.
    pub fn write_outputs(&self, manifest_for: &Path, outputs: &[(&Path, &[u8])]) -> CliResult<()> {
        for (p, bytes) in outputs {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| data_err(dir, e))?;
            }
            fs::write(p, bytes).map_err(|e| data_err(p, e))?;
        }
        let manifest = manifest_path(manifest_for);
        fs::write(&manifest, self.render(outputs)).map_err(|e| data_err(&manifest, e))
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.tsv");
    output.with_file_name(name)
}

/// Writes `text` to `out` (with a manifest) or to stdout.
pub fn emit(manifest: &Manifest, out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => manifest.write_output(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Internal(format!("stdout: {e}")))
        }
    }
}
