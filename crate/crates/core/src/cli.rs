//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 construction not
//! supported, 3 verification failed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::construct::{self, ConstructionRequest};
use crate::error::{Error, Result};
use crate::io::{BasisFile, MatrixFile};
use crate::isometry::{CoefficientSource, Field};
use crate::model::Family;
use crate::multipartite::{self, marginal_spectrum};
use crate::numerics::{svd, CMatrix};
use crate::tiling::{self, BlockDecomposition, BlockKind, Tiling};
use crate::verify::{self, VerifyTolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNSUPPORTED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ebk", version, about = "Entangled bases with a fixed Schmidt number")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a basis and write it as JSON.
    Generate {
        /// Party dimensions, e.g. `2,3` or `2,2,2`.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        k: usize,
        /// pb, meb, sebk or ebk.
        #[arg(long)]
        family: String,
        /// dft, od, ud or file:PATH (a matrix file).
        #[arg(long, default_value = "dft")]
        isometry: String,
        #[arg(long, default_value = "complex")]
        field: String,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Only `none` is accepted: generation is deterministic.
        #[arg(long, default_value = "none")]
        seed: String,
    },
    /// Check a basis file and report its classification.
    Verify {
        path: PathBuf,
        /// Schmidt number to check against; defaults to the file's `k`.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        tol_gram: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol_rank: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Show the block decomposition and corner tiling of a grid.
    Tile {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Print Schmidt coefficients (or per-party marginal spectra) of every state in a file.
    Schmidt {
        path: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol_rank: f64,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate { dims, k, family, isometry, field, out: path, seed } => {
            cmd_generate(&dims, k, &family, &isometry, &field, path.as_deref(), &seed, out)
        }
        Command::Verify { path, k, tol_gram, tol_rank, format } => {
            let tol = VerifyTolerances { gram: tol_gram, rank: tol_rank, ..VerifyTolerances::default() };
            cmd_verify(&path, k, tol, format, out)
        }
        Command::Tile { dims, k, format } => cmd_tile(&dims, k, format, out),
        Command::Schmidt { path, tol_rank, format } => cmd_schmidt(&path, tol_rank, format, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_unsupported() {
                EXIT_UNSUPPORTED
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::Io(e.to_string()))
}

fn coefficient_source(arg: &str, field: Field) -> Result<CoefficientSource> {
    match arg {
        "dft" => Ok(CoefficientSource::Dft),
        "od" => Ok(CoefficientSource::Od),
        "ud" => Ok(CoefficientSource::Ud),
        other => match other.strip_prefix("file:") {
            Some(path) => {
                let m = MatrixFile::parse(&read(Path::new(path))?)?;
                Ok(CoefficientSource::Custom(m.to_isometry(field)?))
            }
            None => Err(Error::InvalidInput(format!("unknown isometry `{other}` (dft, od, ud or file:PATH)"))),
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    dims: &[usize],
    k: usize,
    family: &str,
    isometry: &str,
    field: &str,
    path: Option<&Path>,
    seed: &str,
    out: &mut dyn Write,
) -> Result<i32> {
    if seed != "none" {
        return Err(Error::InvalidInput(format!("--seed `{seed}`: generation is deterministic, only `none` is accepted")));
    }
    if dims.len() < 2 {
        return Err(Error::InvalidInput("--dims needs at least two parties".into()));
    }
    let family = Family::parse(family)?;
    let field = Field::parse(field)?;
    let coeffs = coefficient_source(isometry, field)?;
    let mut file = if dims.len() == 2 {
        let req = ConstructionRequest::new(dims[0], dims[1], k, family).with_coeffs(coeffs.clone()).with_field(field);
        BasisFile::from_bipartite(&construct::generate(&req)?)
    } else {
        BasisFile::from_multipartite(&multipartite::generate_npartite(dims, k, family, &coeffs, field)?)
    };
    file.provenance.insert("isometry".into(), coeffs.describe());
    let json = file.to_json();
    match path {
        Some(p) => fs::write(p, json).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        None => write_out(out, &json)?,
    }
    Ok(EXIT_OK)
}

fn cmd_verify(path: &Path, k: Option<usize>, tol: VerifyTolerances, format: OutputFormat, out: &mut dyn Write) -> Result<i32> {
    if !(tol.gram > 0.0 && tol.rank > 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    let file = BasisFile::parse(&read(path)?)?;
    let k = k.unwrap_or(file.k);
    let report = verify::verify_tensors(&file.dims, &file.dense_states(), k, &tol)?;
    let claimed = file.family();
    let ok = report.classification.satisfies(claimed);
    match format {
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Envelope<'a> {
                claimed_family: &'a str,
                pass: bool,
                report: &'a verify::VerificationReport,
            }
            let env = Envelope { claimed_family: claimed.as_str(), pass: ok, report: &report };
            let mut s = serde_json::to_string_pretty(&env).map_err(|e| Error::Format(e.to_string()))?;
            s.push('\n');
            write_out(out, &s)?;
        }
        OutputFormat::Text => {
            let mut s = report.render_text();
            s.push_str(&format!(
                "claimed family {claimed}: {}\n",
                if ok { "PASS" } else { "FAIL" }
            ));
            write_out(out, &s)?;
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

#[derive(Serialize)]
struct TileOutput {
    dims: [usize; 2],
    k: usize,
    cyclic_only: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    decomposition: Option<BlockDecomposition>,
    #[serde(skip_serializing_if = "Option::is_none")]
    corner_tiling: Option<Tiling>,
}

fn cmd_tile(dims: &[usize], k: usize, format: OutputFormat, out: &mut dyn Write) -> Result<i32> {
    let &[d, dp] = dims else {
        return Err(Error::InvalidInput("tile takes exactly two dimensions".into()));
    };
    if k == 0 || k > d.min(dp) || d == 0 {
        return Err(Error::InvalidInput(format!("k = {k} must satisfy 1 <= k <= min(d, d')")));
    }
    let (lo, hi) = (d.min(dp), d.max(dp));
    let output = if (d * dp) % k == 0 {
        TileOutput { dims: [d, dp], k, cyclic_only: true, decomposition: None, corner_tiling: None }
    } else {
        let dec = tiling::block_decompose(lo, hi, k)?;
        let corner = *dec.corner();
        let t = tiling::tile_corner(corner.rows, corner.cols, k)?;
        TileOutput { dims: [d, dp], k, cyclic_only: false, decomposition: Some(dec), corner_tiling: Some(t) }
    };
    let text = match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&output).map_err(|e| Error::Format(e.to_string()))?;
            s.push('\n');
            s
        }
        OutputFormat::Text => render_tiling(&output, d > dp),
    };
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

fn render_tiling(t: &TileOutput, transposed: bool) -> String {
    let [d, dp] = t.dims;
    let (Some(dec), Some(tiling)) = (&t.decomposition, &t.corner_tiling) else {
        return format!("{d}x{dp}, k = {}: k divides d*d' = {}, cyclic only\n", t.k, d * dp);
    };
    let mut s = format!(
        "{d}x{dp}, k = {}: d = {}*{} + {}, d' = {}*{} + {}\n",
        t.k, dec.s, t.k, dec.r, dec.sprime, t.k, dec.rprime
    );
    if transposed {
        s.push_str(&format!("shown transposed as {}x{}\n", dec.d, dec.dprime));
    }
    s.push_str("blocks:\n");
    for (i, b) in dec.blocks.iter().enumerate() {
        let kind = match b.kind {
            BlockKind::Cyclic => "cyclic",
            BlockKind::Corner => "corner",
        };
        s.push_str(&format!(
            "  {} {kind:<6} rows {}..{} cols {}..{} ({}x{})\n",
            block_letter(i),
            b.row0,
            b.row0 + b.rows,
            b.col0,
            b.col0 + b.cols,
            b.rows,
            b.cols
        ));
    }
    let excess: Vec<String> = tiling.l_patterns.iter().map(|l| l.s.to_string()).collect();
    s.push_str(&format!(
        "corner: {} diagonal(s) D0.., {} L-pattern(s) L0.. with excess [{}]\n",
        tiling.diagonals.len(),
        tiling.l_patterns.len(),
        excess.join(", ")
    ));
    let corner = dec.corner();
    let mut labels = vec![String::new(); dec.d * dec.dprime];
    for (i, b) in dec.blocks.iter().enumerate().filter(|(_, b)| b.kind == BlockKind::Cyclic) {
        for r in b.row0..b.row0 + b.rows {
            for c in b.col0..b.col0 + b.cols {
                labels[r * dec.dprime + c] = block_letter(i).to_string();
            }
        }
    }
    for (i, dg) in tiling.diagonals.iter().enumerate() {
        for &(r, c) in dg {
            labels[(r + corner.row0) * dec.dprime + c + corner.col0] = format!("D{i}");
        }
    }
    for (i, l) in tiling.l_patterns.iter().enumerate() {
        for &(r, c) in &l.singletons {
            labels[(r + corner.row0) * dec.dprime + c + corner.col0] = format!("L{i}");
        }
        for &(r, c) in &l.line {
            labels[(r + corner.row0) * dec.dprime + c + corner.col0] = format!("L{i}|");
        }
    }
    let width = labels.iter().map(String::len).max().unwrap_or(1) + 1;
    for r in 0..dec.d {
        let row: Vec<String> = (0..dec.dprime).map(|c| format!("{:>width$}", labels[r * dec.dprime + c])).collect();
        s.push_str(&row.concat());
        s.push('\n');
    }
    s.push_str("(letters: cyclic blocks; Dn: diagonal n; Ln: L-pattern n, `|` marks its shared line)\n");
    s
}

fn block_letter(i: usize) -> char {
    (b'a' + i as u8) as char
}

#[derive(Serialize)]
struct SchmidtEntry {
    index: usize,
    /// Singular values above the tolerance for each party's unfolding.
    spectra: Vec<Vec<f64>>,
    ranks: Vec<usize>,
}

fn cmd_schmidt(path: &Path, tol_rank: f64, format: OutputFormat, out: &mut dyn Write) -> Result<i32> {
    let file = BasisFile::parse(&read(path)?)?;
    let parties = if file.dims.len() == 2 { 1 } else { file.dims.len() };
    let mut entries = Vec::new();
    for (index, v) in file.dense_states().iter().enumerate() {
        let mut spectra = Vec::with_capacity(parties);
        for party in 0..parties {
            let sv = if file.dims.len() == 2 {
                svd(&CMatrix::new(file.dims[0], file.dims[1], v.clone())?)?.singular_values
            } else {
                marginal_spectrum(v, &file.dims, party)?
            };
            spectra.push(sv.into_iter().filter(|&x| x > tol_rank).collect::<Vec<_>>());
        }
        let ranks = spectra.iter().map(Vec::len).collect();
        entries.push(SchmidtEntry { index, spectra, ranks });
    }
    let text = match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&entries).map_err(|e| Error::Format(e.to_string()))?;
            s.push('\n');
            s
        }
        OutputFormat::Text => {
            let mut s = String::new();
            for e in &entries {
                let parts: Vec<String> = e
                    .spectra
                    .iter()
                    .map(|sp| sp.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(" "))
                    .collect();
                let ranks: Vec<String> = e.ranks.iter().map(ToString::to_string).collect();
                s.push_str(&format!("state {:>3}  rank {}  [{}]\n", e.index, ranks.join("/"), parts.join(" | ")));
            }
            s
        }
    };
    write_out(out, &text)?;
    Ok(EXIT_OK)
}
