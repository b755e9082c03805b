use std::io::Write;

use anyhow::Context;

fn emit(out: &reqpath::CliOutput) -> anyhow::Result<()> {
    std::io::stdout()
        .write_all(out.stdout.as_bytes())
        .context("writing to stdout")?;
    std::io::stderr()
        .write_all(out.stderr.as_bytes())
        .context("writing to stderr")?;
    Ok(())
}

fn main() {
    let out = reqpath::cli_dispatch(std::env::args_os());
    if let Err(e) = emit(&out) {
        // stdout may be a closed pipe; stderr is the last resort
        let _ = writeln!(std::io::stderr(), "error: {e:#}");
        std::process::exit(74);
    }
    std::process::exit(out.code);
}
