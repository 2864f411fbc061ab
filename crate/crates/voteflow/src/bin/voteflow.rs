use std::process::ExitCode;

fn main() -> ExitCode {
    voteflow::cli::main()
}
