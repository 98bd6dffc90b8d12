use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use proofchain::report;
use proofchain::simulation::{
    run as run_scenario, run_until, RunError, RunOutput, Scenario, ScenarioError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Invariant(#[from] RunError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{} golden file(s) differ", .0.len())]
    Mismatch(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Scenario(_) | CliError::Io { .. } => 1,
            CliError::Invariant(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}

/// Every file a scenario produces, keyed by file name.
fn outputs(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let scenario = Scenario::load(path)?;
    let name = stem(path);
    let RunOutput { world, log } = run_scenario(&scenario)?;
    let mut files = BTreeMap::new();
    files.insert(
        format!("{name}.report"),
        report::render(&name, &world, &log),
    );
    for (tick, dot) in &world.snapshots {
        let mut file = format!("{name}@{tick}.dot");
        let mut k = 2;
        while files.contains_key(&file) {
            file = format!("{name}@{tick}-{k}.dot");
            k += 1;
        }
        files.insert(file, dot.clone());
    }
    Ok(files)
}

pub fn run(scenario: &Path, report_path: &Path, dot_dir: Option<&Path>) -> Result<(), CliError> {
    let files = outputs(scenario)?;
    for (name, text) in &files {
        if name.ends_with(".report") {
            write(report_path, text)?;
        } else if let Some(dir) = dot_dir {
            write(&dir.join(name), text)?;
        }
    }
    Ok(())
}

pub fn dot(scenario: &Path, tick: u64, out: &Path) -> Result<(), CliError> {
    let scenario = Scenario::load(scenario)?;
    let world = run_until(&scenario, Some(tick))?.world;
    write(out, &world.dot())
}

fn scenarios(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "scn") {
            found.push(path);
        }
    }
    found.sort();
    Ok(found)
}

/// Files already in the golden directory that belong to `name`.
fn golden_files(golden: &Path, name: &str) -> Result<Vec<String>, CliError> {
    if !golden.is_dir() {
        return Ok(Vec::new());
    }
    let mut found = Vec::new();
    for entry in fs::read_dir(golden).map_err(io_err(golden))? {
        let file = entry
            .map_err(io_err(golden))?
            .file_name()
            .to_string_lossy()
            .into_owned();
        if file == format!("{name}.report") || file.starts_with(&format!("{name}@")) {
            found.push(file);
        }
    }
    found.sort();
    Ok(found)
}

pub fn verify(dir: &Path, bless: bool) -> Result<(), CliError> {
    let golden = dir.join("golden");
    let mut mismatches = Vec::new();
    for path in scenarios(dir)? {
        let name = stem(&path);
        let files = outputs(&path)?;
        let existing = golden_files(&golden, &name)?;
        if bless {
            for stale in existing.iter().filter(|f| !files.contains_key(*f)) {
                let p = golden.join(stale);
                fs::remove_file(&p).map_err(io_err(&p))?;
            }
            for (file, text) in &files {
                write(&golden.join(file), text)?;
            }
            continue;
        }
        for stale in existing.iter().filter(|f| !files.contains_key(*f)) {
            mismatches.push(format!(
                "{}: not produced by the run",
                golden.join(stale).display()
            ));
        }
        for (file, text) in &files {
            let p = golden.join(file);
            match fs::read_to_string(&p) {
                Ok(expected) if expected == *text => {}
                Ok(expected) => {
                    mismatches.push(format!("{}:\n{}", p.display(), diff(&expected, text)))
                }
                Err(e) if e.kind() == io::ErrorKind::NotFound => {
                    mismatches.push(format!("{}: missing", p.display()))
                }
                Err(e) => return Err(io_err(&p)(e)),
            }
        }
    }
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(mismatches))
    }
}

/// Line-by-line comparison, capped so one bad file does not flood the
/// terminal.
fn diff(expected: &str, actual: &str) -> String {
    const MAX: usize = 10;
    let a: Vec<&str> = expected.lines().collect();
    let b: Vec<&str> = actual.lines().collect();
    let mut out = Vec::new();
    let mut shown = 0;
    for i in 0..a.len().max(b.len()) {
        let (x, y) = (a.get(i), b.get(i));
        if x == y {
            continue;
        }
        if shown == MAX {
            out.push("  ...".to_string());
            break;
        }
        shown += 1;
        if let Some(x) = x {
            out.push(format!("  {}: - {x}", i + 1));
        }
        if let Some(y) = y {
            out.push(format!("  {}: + {y}", i + 1));
        }
    }
    out.join("\n")
}
