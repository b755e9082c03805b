//! Front ends over `reqpath-core`: an HTTP service, the `reqpath` command
//! line, file-backed session storage and Markdown decision reports.

pub mod cli;
pub mod config;
pub mod error;
pub mod http;
pub mod persistence;
pub mod report;

pub use cli::{cli_dispatch, CliOutput};
pub use config::ServiceConfig;
pub use error::ApiError;
pub use http::{router, serve, AppState};
pub use persistence::{load_session, save_session, PersistError};
pub use report::{build_report, Report, ReportError};
