//! Results depend on the seed only, not on how many threads run the work.

use perclab::stats::{conditional_profiles, conditional_two_point, estimate_size_pmf, ConditionalOptions};
use perclab::{diagrams, pc};

fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

#[test]
fn size_histogram_is_thread_count_independent() {
    let run = || estimate_size_pmf(0.085, 6, 5_000, 2_000, 17).unwrap();
    assert_eq!(with_threads(1, run), with_threads(3, run));
}

#[test]
fn conditional_measures_are_thread_count_independent() {
    let opts = ConditionalOptions { batches: 4, ..Default::default() };
    let run = || {
        let q = conditional_two_point(0.0787, 7, 64, 0.1, 40, 23, &opts).unwrap();
        let k = [0.7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        (q.accepted, q.attempted, q.measure.fourier(&k).unwrap().re.to_bits())
    };
    assert_eq!(with_threads(1, run), with_threads(3, run));

    let profiles = || {
        let p = conditional_profiles(0.0787, 7, 64, 0.1, 40, 29, 1 << 30).unwrap();
        p.profiles.iter().map(|a| a.mean_sq().to_bits()).collect::<Vec<_>>()
    };
    assert_eq!(with_threads(1, profiles), with_threads(3, profiles));
}

#[test]
fn diagrams_and_pc_are_thread_count_independent() {
    let square = || diagrams::square_scaling(7, &[0.9, 0.99], 3_000, 31).unwrap();
    assert_eq!(with_threads(1, square), with_threads(3, square));
    let tri = || diagrams::triangle_mc(0.05, 7, 300, 10_000, 37).unwrap();
    assert_eq!(with_threads(1, tri), with_threads(3, tri));
    let shells = || pc::shell_means(0.08, 7, 8, 500, 41).unwrap();
    assert_eq!(with_threads(1, shells), with_threads(3, shells));
}
