use treebias_core::dgp::Dataset;
use treebias_core::enumeration::{binomial, split_for_ordering, unrank, OrderingPattern};
use treebias_core::tree::{best_split, fit, FitConfig};

fn single_feature(pattern: &OrderingPattern) -> Dataset {
    let n = pattern.n();
    let features = (0..n).map(|t| (t as f64 + 0.5) / n as f64).collect();
    let labels = pattern.bits().iter().map(|&b| b as u8).collect();
    Dataset::new(features, 1, labels, None).unwrap()
}

fn word_to_pattern(word: u64, n: usize) -> OrderingPattern {
    OrderingPattern::new((0..n).map(|t| word >> (n - 1 - t) & 1 == 1).collect()).unwrap()
}

#[test]
fn ordering_split_matches_tree_split() {
    for n in 3..=12usize {
        for m in 1..n {
            for r in 0..binomial(n as u64, m as u64).unwrap() {
                let pattern = word_to_pattern(unrank(n, m, r).unwrap(), n);
                let data = single_feature(&pattern);
                let rows: Vec<usize> = (0..n).collect();
                let tree_split = best_split(&data, &rows, &[0]).unwrap().unwrap();
                assert_eq!(tree_split.summary, split_for_ordering(&pattern), "{pattern}");
            }
        }
    }
}

#[test]
fn first_tree_split_is_recorded() {
    let pattern = OrderingPattern::parse("0110001000").unwrap();
    let model = fit(&single_feature(&pattern), &FitConfig::purity()).unwrap();
    let root = model.split_records().iter().find(|r| r.depth == 0).unwrap();
    assert_eq!((root.summary.i, root.summary.a, root.summary.k), (3, 2, 1));
    assert_eq!(model.prevalence_empirical(&single_feature(&pattern)).unwrap().0, 0.3);
}
