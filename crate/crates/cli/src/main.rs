use std::io::Write;

fn main() {
    let env_seed = std::env::var("SMC_SEED").ok();
    let out = tpsmc::run(std::env::args_os(), env_seed.as_deref());
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    let _ = std::io::stdout().flush();
    std::process::exit(out.exit as i32);
}
