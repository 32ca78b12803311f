//! Running user-configured commands with a timeout and captured output.

use std::ffi::OsString;
use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

/// A command line given as a shell-quoted string or as an argv list. It is
/// split, never passed to a shell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CommandRepr", into = "String")]
pub struct CommandSpec {
    argv: Vec<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CommandRepr {
    Line(String),
    Argv(Vec<String>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CommandSpecError {
    #[error("empty command")]
    Empty,
    #[error("unbalanced quoting in command {0:?}")]
    Quoting(String),
}

impl CommandSpec {
    pub fn new(argv: Vec<String>) -> Result<CommandSpec, CommandSpecError> {
        if argv.first().is_none_or(|a| a.is_empty()) {
            return Err(CommandSpecError::Empty);
        }
        Ok(CommandSpec { argv })
    }

    pub fn argv(&self) -> &[String] {
        &self.argv
    }

    pub fn program(&self) -> &str {
        &self.argv[0]
    }
}

impl FromStr for CommandSpec {
    type Err = CommandSpecError;

    fn from_str(s: &str) -> Result<CommandSpec, CommandSpecError> {
        let argv = shlex::split(s).ok_or_else(|| CommandSpecError::Quoting(s.to_string()))?;
        CommandSpec::new(argv)
    }
}

impl TryFrom<CommandRepr> for CommandSpec {
    type Error = CommandSpecError;

    fn try_from(r: CommandRepr) -> Result<CommandSpec, CommandSpecError> {
        match r {
            CommandRepr::Line(s) => s.parse(),
            CommandRepr::Argv(v) => CommandSpec::new(v),
        }
    }
}

impl From<CommandSpec> for String {
    fn from(c: CommandSpec) -> String {
        c.to_string()
    }
}

impl fmt::Display for CommandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let quoted = shlex::try_join(self.argv.iter().map(String::as_str))
            .unwrap_or_else(|_| self.argv.join(" "));
        f.write_str(&quoted)
    }
}

#[derive(Debug, Error)]
#[error("cannot start `{command}` in {cwd}: {source}")]
pub struct SpawnError {
    pub command: String,
    pub cwd: PathBuf,
    #[source]
    pub source: std::io::Error,
}

#[derive(Debug)]
pub(crate) struct Outcome {
    /// `None` when the process was killed on timeout.
    pub status: Option<ExitStatus>,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.status.is_some_and(|s| s.success())
    }

    pub fn timed_out(&self) -> bool {
        self.status.is_none()
    }
}

/// Runs `cmd` in `cwd` and waits at most `timeout`. A relative program path
/// containing a separator is resolved against `cwd`.
pub(crate) fn run(
    cmd: &CommandSpec,
    cwd: &Path,
    env: &[(&str, OsString)],
    timeout: Duration,
) -> Result<Outcome, SpawnError> {
    let program = Path::new(cmd.program());
    let program = if program.is_relative() && program.components().count() > 1 {
        cwd.join(program)
    } else {
        program.to_path_buf()
    };
    let spawn_err = |source| SpawnError {
        command: cmd.to_string(),
        cwd: cwd.to_path_buf(),
        source,
    };
    tracing::debug!(command = %cmd, cwd = %cwd.display(), "spawn");
    let mut child = Command::new(program)
        .args(&cmd.argv[1..])
        .current_dir(cwd)
        .envs(env.iter().map(|(k, v)| (k, v)))
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(spawn_err)?;

    let drain = |pipe: Option<Box<dyn Read + Send>>| {
        std::thread::spawn(move || {
            let mut buf = Vec::new();
            if let Some(mut p) = pipe {
                let _ = p.read_to_end(&mut buf);
            }
            String::from_utf8_lossy(&buf).into_owned()
        })
    };
    let out = drain(
        child
            .stdout
            .take()
            .map(|p| Box::new(p) as Box<dyn Read + Send>),
    );
    let err = drain(
        child
            .stderr
            .take()
            .map(|p| Box::new(p) as Box<dyn Read + Send>),
    );

    let status = match child.wait_timeout(timeout).map_err(spawn_err)? {
        Some(status) => Some(status),
        None => {
            let _ = child.kill();
            let _ = child.wait();
            None
        }
    };
    Ok(Outcome {
        status,
        stdout: out.join().unwrap_or_default(),
        stderr: err.join().unwrap_or_default(),
    })
}

/// Keeps the tail of `text`, which is where build tools print the error,
/// within `max` bytes.
pub(crate) fn excerpt(text: &str, max: usize) -> String {
    if text.len() <= max {
        return text.to_string();
    }
    let mut start = text.len() - max;
    while !text.is_char_boundary(start) {
        start += 1;
    }
    format!("[... truncated ...]\n{}", &text[start..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_quoted_lines() {
        let c: CommandSpec = "sh -c 'echo hi there'".parse().unwrap();
        assert_eq!(c.argv(), ["sh", "-c", "echo hi there"]);
        assert_eq!(c.to_string(), "sh -c 'echo hi there'");
        assert_eq!("".parse::<CommandSpec>(), Err(CommandSpecError::Empty));
        assert!(matches!(
            "sh 'x".parse::<CommandSpec>(),
            Err(CommandSpecError::Quoting(_))
        ));
    }

    #[test]
    fn deserializes_string_or_list() {
        #[derive(Deserialize)]
        struct W {
            a: CommandSpec,
            b: CommandSpec,
        }
        let w: W = toml::from_str("a = \"make test\"\nb = [\"make\", \"test\"]").unwrap();
        assert_eq!(w.a, w.b);
    }

    #[test]
    fn captures_and_times_out() {
        let dir = tempfile::tempdir().unwrap();
        let c: CommandSpec = "sh -c 'echo out; echo err >&2; exit 3'".parse().unwrap();
        let o = run(&c, dir.path(), &[], Duration::from_secs(10)).unwrap();
        assert_eq!(o.status.unwrap().code(), Some(3));
        assert_eq!(o.stdout, "out\n");
        assert_eq!(o.stderr, "err\n");

        let slow: CommandSpec = "sleep 5".parse().unwrap();
        let o = run(&slow, dir.path(), &[], Duration::from_millis(100)).unwrap();
        assert!(o.timed_out());

        let missing: CommandSpec = "definitely-not-a-command-xyz".parse().unwrap();
        assert!(run(&missing, dir.path(), &[], Duration::from_secs(1)).is_err());
    }

    #[test]
    fn excerpt_keeps_tail() {
        assert_eq!(excerpt("abc", 10), "abc");
        let e = excerpt("0123456789", 4);
        assert!(e.ends_with("6789"));
    }
}
