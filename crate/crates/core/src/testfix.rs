//! Shared instances for unit tests.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{Instance, RandomPriority, SimplePriority};
use crate::{ratio, Rational};

fn named_instance(prefs: Vec<Vec<usize>>, m: usize) -> Instance {
    let n = prefs.len();
    let agents = (1..=n).map(|i| i.to_string()).collect();
    let items = (0..m).map(|j| ((b'a' + j as u8) as char).to_string()).collect();
    Instance::new(agents, items, prefs).unwrap()
}

fn priority(orders: &[&[usize]], weights: &[(i64, i64)]) -> RandomPriority<Rational> {
    let entries = orders
        .iter()
        .zip(weights)
        .map(|(order, &(num, den))| (SimplePriority::new(order.to_vec()).unwrap(), ratio(num, den)))
        .collect();
    RandomPriority::new(entries).unwrap()
}

/// Four agents, four items. Agents 0 and 2 rank `a > b > c > d`, agents 1
/// and 3 rank `b > a > c > d`. Two equally likely priority orders:
/// `4,2,3,1` and `3,1,4,2` (1-based names).
pub fn crossed_pairs() -> (Instance, RandomPriority<Rational>) {
    let inst = named_instance(
        vec![vec![0, 1, 2, 3], vec![1, 0, 2, 3], vec![0, 1, 2, 3], vec![1, 0, 2, 3]],
        4,
    );
    let prio = priority(&[&[3, 1, 2, 0], &[2, 0, 3, 1]], &[(1, 2), (1, 2)]);
    (inst, prio)
}

/// Five agents, five items. Preferences as in [`crossed_pairs`] for the
/// first four agents plus `a > c > b > d > e` for agent 4; two equally
/// likely orders `3,5,1,4,2` and `4,5,2,3,1` (1-based names).
pub fn five_agent() -> (Instance, RandomPriority<Rational>) {
    let inst = named_instance(
        vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 2, 3, 4],
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 2, 3, 4],
            vec![0, 2, 1, 3, 4],
        ],
        5,
    );
    let prio = priority(&[&[2, 4, 0, 3, 1], &[3, 4, 1, 2, 0]], &[(1, 2), (1, 2)]);
    (inst, prio)
}

/// Uniformly random small instance: 2..=6 agents, up to two spare items,
/// 1..=4 priority orders with random positive weights summing to one.
pub fn random_instance<R: Rng>(rng: &mut R) -> (Instance, RandomPriority<Rational>) {
    let n = rng.random_range(2..=6);
    let m = rng.random_range(n..=n + 2);
    let prefs = (0..n)
        .map(|_| {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(rng);
            order
        })
        .collect();
    let inst = named_instance(prefs, m);

    let k = rng.random_range(1..=4);
    let raw: Vec<i64> = (0..k).map(|_| rng.random_range(1..=9)).collect();
    let total: i64 = raw.iter().sum();
    let entries = raw
        .into_iter()
        .map(|u| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            (SimplePriority::new(order).unwrap(), ratio(u, total))
        })
        .collect();
    (inst, RandomPriority::new(entries).unwrap())
}
