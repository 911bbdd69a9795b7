use std::fmt;
use std::process::ExitCode;

use cuboid_core::Error;

/// A failed run, split by exit status.
#[derive(Debug)]
pub enum Failure {
  Usage(anyhow::Error),
  Data(anyhow::Error),
}

impl Failure {
  pub fn usage(msg: impl fmt::Display) -> Self {
    Failure::Usage(anyhow::anyhow!("{msg}"))
  }

  pub fn data(msg: impl fmt::Display) -> Self {
    Failure::Data(anyhow::anyhow!("{msg}"))
  }

  pub fn exit_code(&self) -> ExitCode {
    match self {
      Failure::Usage(_) => ExitCode::from(1),
      Failure::Data(_) => ExitCode::from(2),
    }
  }

  /// Adds a leading context line to the message.
  pub fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
    match self {
      Failure::Usage(e) => Failure::Usage(e.context(ctx)),
      Failure::Data(e) => Failure::Data(e.context(ctx)),
    }
  }
}

impl fmt::Display for Failure {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let (kind, e) = match self {
      Failure::Usage(e) => ("usage error", e),
      Failure::Data(e) => ("data error", e),
    };
    write!(f, "{kind}: {e:#}")
  }
}

impl From<Error> for Failure {
  fn from(e: Error) -> Self {
    match e {
      Error::ZeroDimensions { .. }
      | Error::ZeroCuboids
      | Error::Config(_)
      | Error::TooFewPoints(_) => Failure::Usage(e.into()),
      _ => Failure::Data(e.into()),
    }
  }
}

impl From<std::io::Error> for Failure {
  fn from(e: std::io::Error) -> Self {
    Failure::Data(e.into())
  }
}

pub type Outcome<T = ()> = Result<T, Failure>;

pub trait Context<T> {
  fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Outcome<T>;
}

impl<T, E: Into<Failure>> Context<T> for Result<T, E> {
  fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Outcome<T> {
    self.map_err(|e| e.into().context(ctx))
  }
}
