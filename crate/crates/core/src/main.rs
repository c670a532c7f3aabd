use soup_dil::cli;

fn main() {
    if let Some(threads) = std::env::var(cli::THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        // Only fails if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    std::process::exit(cli::run(std::env::args_os()));
}
