use compograph::cli::{run, Style};

fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run(
        std::env::args_os(),
        &mut stdout.lock(),
        &mut stderr.lock(),
        Style::detect(),
    );
    std::process::exit(code);
}
