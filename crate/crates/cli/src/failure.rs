//! Exit-code classification.

use std::fmt::Display;

use homenet::Error;
use homenet_monitor::MonitorError;

pub const DOMAIN: u8 = 1;
pub const USAGE: u8 = 2;
pub const IO: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn domain(msg: impl Display) -> Self {
        Failure {
            code: DOMAIN,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn usage(msg: impl Display) -> Self {
        Failure {
            code: USAGE,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn io(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: IO,
            error: error.into(),
        }
    }

    pub fn context(mut self, what: impl Display + Send + Sync + 'static) -> Self {
        self.error = self.error.context(what);
        self
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NoPath { .. }
            | Error::InstanceTooLarge { .. }
            | Error::MisroutedFrame { .. } => DOMAIN,
            Error::InvalidInput(_) | Error::UnknownNode(_) | Error::InvalidPath(_) => USAGE,
            Error::Io(_) | Error::Parse { .. } | Error::AsymmetricTable { .. } => IO,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<MonitorError> for Failure {
    fn from(e: MonitorError) -> Self {
        let code = match &e {
            MonitorError::InvalidInput(_) => USAGE,
            MonitorError::NoCoordinator | MonitorError::UnknownTicket(_) => DOMAIN,
            _ => IO,
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::io(e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::io(e)
    }
}
