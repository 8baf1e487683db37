//! Runs a canned figure experiment (default fig1) into a directory given as
//! the second argument (default `spoisson-out/<figure>`).

use std::path::PathBuf;

use stochastic_poisson::harness::{reproduce, resolve_output_dir, Figure};

fn main() {
    let mut args = std::env::args().skip(1);
    let figure = args.next().unwrap_or_else(|| "fig1".into());
    let Some(figure) = Figure::from_label(&figure) else {
        eprintln!("unknown figure `{figure}`; expected fig1, fig2 or fig3");
        std::process::exit(2);
    };
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| resolve_output_dir(None, None).join(figure.label()));
    let bundle = reproduce(figure, &dir).unwrap();
    for p in bundle.csv.iter().chain(&bundle.svg) {
        println!("{}", p.display());
    }
    println!("manifest {} ({})", bundle.manifest.display(), bundle.content_hash);
}
