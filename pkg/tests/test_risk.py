import numpy as np
import pytest

from mcldce.centroid import correct_centroid, empirical_centroid
from mcldce.data import Dataset, gen_gaussian_mixture, mixture_spec
from mcldce.errors import DivergenceError, SingularSystemError, ValidationError
from mcldce.noise import symmetric_T
from mcldce.risk import (LinearModel, RiskConfig, closed_form_solve, decomposed_risk, iterative_train,
                         load_model_csv, naive_mse_risk, objective, predict, risk_gradient,
                         save_model_csv, step_size_at)

from oracles import finite_difference_gradient, naive_risk_loop, random_instance


@pytest.fixture
def problem():
    ds = gen_gaussian_mixture(mixture_spec(3, 5, seed=4), 800)
    return ds.features, empirical_centroid(ds), ds


def test_naive_risk_examples():
    ds = gen_gaussian_mixture(mixture_spec(3, 4, seed=0), 50)
    assert naive_mse_risk(np.zeros((4, 3)), ds) == 1.0
    one = Dataset.from_classes([[1.0]], [0], 2)
    assert naive_mse_risk(np.array([[1.0, 0.0]]), one) == 0.0
    with pytest.raises(ValidationError):
        naive_mse_risk(np.zeros((3, 3)), ds)


def test_naive_risk_matches_loop():
    rng = np.random.default_rng(0)
    X, classes, c, W = random_instance(rng, n_max=50, d_max=6, c_max=5)
    ds = Dataset.from_classes(X, classes, c)
    assert naive_mse_risk(W, ds) == pytest.approx(naive_risk_loop(W, X, ds.labels), rel=1e-12)


def test_decomposed_risk_examples():
    rng = np.random.default_rng(1)
    assert decomposed_risk(np.zeros((3, 2)), rng.normal(size=(5, 3)), rng.normal(size=(3, 2))) == 1.0
    one = Dataset.from_classes([[1.0]], [0], 2)
    assert decomposed_risk(np.array([[1.0, 0.0]]), one.features, empirical_centroid(one)) == 0.0
    with pytest.raises(ValidationError):
        decomposed_risk(np.zeros((3, 2)), np.zeros((5, 3)), np.zeros((3, 3)))


@pytest.mark.parametrize("seed", range(20))
def test_decomposition_identity(seed):
    rng = np.random.default_rng(seed)
    X, classes, c, W = random_instance(rng)
    ds = Dataset.from_classes(X, classes, c)
    naive = naive_mse_risk(W, ds)
    assert abs(naive - decomposed_risk(W, X, empirical_centroid(ds))) <= 1e-9 * (1 + abs(naive))


def test_gradient_examples(problem):
    X, mu, _ = problem
    assert np.array_equal(risk_gradient(np.zeros_like(mu), X, mu, 0.0), -2 * mu)
    lam = 0.05
    C = X.T @ X / X.shape[0]
    W = np.linalg.solve(C + lam * np.eye(C.shape[0]), mu)
    assert np.abs(risk_gradient(W, X, mu, lam)).max() <= 1e-10


@pytest.mark.parametrize("seed", range(10))
def test_gradient_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    X, classes, c, W = random_instance(rng, n_max=200, d_max=10, c_max=10)
    mu = empirical_centroid(Dataset.from_classes(X, classes, c))
    lam = float(rng.uniform(0, 0.1))
    G = risk_gradient(W, X, mu, lam)
    F = finite_difference_gradient(lambda V: objective(V, X, mu, lam), W)
    assert np.all(np.abs(G - F) <= 1e-5 * np.maximum(1.0, np.abs(F)))


def test_closed_form_examples():
    rng = np.random.default_rng(2)
    # whitened features: X^T X / n = I
    Q, _ = np.linalg.qr(rng.normal(size=(40, 4)))
    X = Q * np.sqrt(40)
    mu = rng.normal(size=(4, 3))
    assert np.allclose(closed_form_solve(X, mu, 0.0).W, mu, atol=1e-12)
    assert np.abs(closed_form_solve(X, mu, 1e12).W).max() <= 1e-9


def test_closed_form_singular():
    X = np.ones((10, 2))
    with pytest.raises(SingularSystemError, match="lambda > 0"):
        closed_form_solve(X, np.zeros((2, 2)), 0.0)
    closed_form_solve(X, np.zeros((2, 2)), 1e-3)


def test_closed_form_is_minimum(problem):
    X, mu, _ = problem
    lam = 1e-3
    W = closed_form_solve(X, mu, lam).W
    assert np.abs(risk_gradient(W, X, mu, lam)).max() <= 1e-8
    best = objective(W, X, mu, lam)
    rng = np.random.default_rng(0)
    for _ in range(100):
        delta = rng.normal(size=W.shape) * rng.choice([1e-4, 1e-2, 1.0])
        assert objective(W + delta, X, mu, lam) > best


def test_iterative_near_init_when_barely_trained(problem):
    X, mu, _ = problem
    cfg = RiskConfig(epochs=1, batch_size=len(X), step_size=1e-8)
    init = np.random.default_rng(0).normal(size=mu.shape)
    W = iterative_train(X, mu, cfg, init=init).W
    assert np.abs(W - init).max() <= 1e-6


@pytest.mark.parametrize("optimizer", ["adam", "momentum"])
def test_iterative_matches_closed_form(problem, optimizer):
    X, mu, _ = problem
    cfg = RiskConfig(lam=1e-3, optimizer=optimizer)
    it = iterative_train(X, mu, cfg)
    cf = closed_form_solve(X, mu, 1e-3)
    assert abs(objective(it, X, mu, 1e-3) - objective(cf, X, mu, 1e-3)) <= 1e-4
    assert len(it.history) == cfg.epochs
    assert it.history[-1] == pytest.approx(objective(it, X, mu, 1e-3), rel=1e-9)


def test_iterative_deterministic(problem):
    X, mu, _ = problem
    cfg = RiskConfig(epochs=20, seed=5)
    a, b = iterative_train(X, mu, cfg), iterative_train(X, mu, cfg)
    assert a.W.tobytes() == b.W.tobytes()


def test_iterative_divergence(problem):
    X, mu, _ = problem
    cfg = RiskConfig(optimizer="momentum", step_size=10.0, epochs=50)
    with pytest.raises(DivergenceError) as info:
        iterative_train(X, mu, cfg)
    assert info.value.epoch < 50


def test_step_size_schedule():
    cfg = RiskConfig()
    assert step_size_at(cfg, 0) == step_size_at(cfg, 79) == 0.001
    assert step_size_at(cfg, 80) == pytest.approx(0.001)
    assert step_size_at(cfg, 140) == pytest.approx(0.0005)
    assert step_size_at(cfg, 199) == pytest.approx(0.001 / 120)


@pytest.mark.parametrize("kwargs", [dict(lam=-1), dict(step_size=0), dict(epochs=0), dict(batch_size=0),
                                    dict(smoothing=1.0), dict(mode="bogus")])
def test_risk_config_validation(kwargs):
    with pytest.raises((ValidationError, ValueError)):
        RiskConfig(**kwargs)


def test_predict():
    W = np.eye(3)
    assert predict(W, np.array([0.0, 1.0, 0.0])) == 1
    assert predict(np.zeros((3, 3)), np.array([4.0, -1.0, 2.0])) == 0
    rng = np.random.default_rng(0)
    W = rng.normal(size=(5, 4))
    X = rng.normal(size=(200, 5))
    base = predict(W, X)
    assert np.array_equal(predict(W, X * 3.7), base)
    # shifting every class score by the same x-dependent amount
    assert np.array_equal(predict(W + rng.normal(size=(5, 1)), X), base)
    assert predict(LinearModel(W), X[0]) == base[0]


def test_model_csv_round_trip(tmp_path, problem):
    X, mu, _ = problem
    m = closed_form_solve(X, mu, 0.01, mode="direct_T")
    save_model_csv(m, tmp_path / "m.csv")
    back = load_model_csv(tmp_path / "m.csv")
    assert np.array_equal(back.W, m.W)
    assert (back.lam, back.mode) == (0.01, "direct_T")


@pytest.mark.parametrize("c, rate", [(3, 0.2), (4, 0.4), (6, 0.6)])
def test_symmetric_correction_leaves_predictions_unchanged(c, rate):
    # inv(T) of a symmetric-noise T is a I + b J; the J part adds the same
    # score to every class, so arg-max decisions match the uncorrected fit.
    ds = gen_gaussian_mixture(mixture_spec(c, 6, seed=c), 2000)
    X, mu = ds.features, empirical_centroid(ds)
    T = symmetric_T(c, rate)
    naive = closed_form_solve(X, mu).W
    corrected = closed_form_solve(X, correct_centroid(mu, T, mode="direct_T")).W
    assert np.array_equal(predict(naive, X), predict(corrected, X))
