mod common;

use common::poincare;

#[test]
fn gradient_matches_central_differences() {
    poincare::gradient_matches_central_differences();
}

#[test]
fn metric_axioms_on_samples() {
    poincare::metric_axioms_on_samples();
}

#[test]
fn points_stay_in_ball_during_training() {
    poincare::points_stay_in_ball_during_training();
}

#[test]
fn star_center_sits_nearer_the_origin() {
    poincare::star_center_sits_nearer_the_origin();
}

#[test]
fn fixed_seed_is_bit_identical() {
    poincare::fixed_seed_is_bit_identical();
}

#[test]
fn loss_decreases_on_a_connected_graph() {
    poincare::loss_decreases_on_a_connected_graph();
}

#[test]
fn two_hundred_nodes_train_quickly() {
    poincare::two_hundred_nodes_train_quickly();
}
