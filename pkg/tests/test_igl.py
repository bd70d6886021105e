import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gctkit.errors import ValidationError
from gctkit.graph import build_graph, laplacian_operator, normalize_columns
from gctkit.igl import (
    IglConfig,
    IglModel,
    LabelMatrix,
    fit,
    objective,
    predict,
    predict_soft,
    system_matrix,
    update_B,
    update_P,
)

from oracles import gradient_descent_relaxed, laplacian_double_sum, random_igl_instance


def _model(P, classes=None, normalize=False):
    P = np.asarray(P, dtype=float)
    classes = tuple(range(P.shape[1])) if classes is None else classes
    return IglModel(P=P, B_diag=np.ones(P.shape[0]), class_order=classes,
                    config=IglConfig(normalize_features=normalize))


def test_config_validation():
    with pytest.raises(ValidationError):
        IglConfig(lam=0.0)
    with pytest.raises(ValidationError):
        IglConfig(mu=-1.0)
    with pytest.raises(ValidationError):
        IglConfig(max_iters=0)


def test_defaults():
    cfg = IglConfig()
    assert (cfg.lam, cfg.mu, cfg.k) == (0.1, 0.6, 10)
    assert (cfg.max_iters, cfg.rel_tol) == (50, 1e-6)
    assert cfg.b_update == "squared" and cfg.laplacian == "expanded_laplacian"


def test_label_matrix_rejects_non_onehot():
    with pytest.raises(ValidationError):
        LabelMatrix(np.array([[1.0, 1.0]]), (0, 1))


def test_label_matrix_sorted_columns():
    Y = LabelMatrix.from_labels(["b", "a", "b"])
    assert Y.class_order == ("a", "b")
    assert np.array_equal(Y.Y, [[0, 1], [1, 0], [0, 1]])


class TestUpdateB:
    def test_zero_row(self):
        assert update_B(np.zeros((1, 3)))[0] == pytest.approx(1e8)

    def test_half_norm(self):
        P = np.array([[0.5, 0.5]])  # squared norm 0.5
        assert update_B(P)[0] == pytest.approx(1.0 / 1.00000001, rel=1e-15)

    def test_matches_oracle(self, rng):
        P = rng.normal(size=(6, 4))
        oracle = [1.0 / (2 * sum(v * v for v in row) + 1e-8) for row in P]
        assert np.abs(update_B(P) - oracle).max() <= 1e-12

    def test_unsquared(self):
        assert update_B(np.array([[3.0, 4.0]]), "unsquared")[0] == pytest.approx(1 / (10 + 1e-8))


class TestUpdateP:
    def test_identity_reduction(self):
        cfg = IglConfig(mu=0.0)
        P = update_P(np.eye(2), LabelMatrix(np.eye(2), (0, 1)), np.zeros((2, 2)), np.ones(2), cfg)
        assert np.allclose(P, np.eye(2))

    def test_residual(self, rng):
        X, labels = random_igl_instance(3)
        Y = LabelMatrix.from_labels(labels)
        cfg = IglConfig()
        L = laplacian_operator(build_graph(X, cfg.k))
        B = rng.uniform(0.5, 2.0, size=X.shape[0])
        P = update_P(X, Y, L, B, cfg)
        assert np.abs(system_matrix(X, L, B, cfg) @ P - cfg.lam * X @ Y.Y).max() <= 1e-8

    def test_matches_gradient_descent(self):
        X, labels = random_igl_instance(11)
        X = normalize_columns(X)
        Y = LabelMatrix.from_labels(labels)
        cfg = IglConfig()
        L = laplacian_operator(build_graph(X, cfg.k))
        B = np.linspace(0.5, 2.0, X.shape[0])
        P = update_P(X, Y, L, B, cfg)
        P_gd = gradient_descent_relaxed(X, Y.Y, L, B, cfg.lam, cfg.mu)
        assert np.abs(P - P_gd).max() <= 1e-4

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            update_P(np.eye(2), LabelMatrix(np.eye(2), (0, 1)), np.zeros((3, 3)), np.ones(2), IglConfig())


class TestObjective:
    def test_zero_projection(self):
        X, labels = random_igl_instance(0)
        Y = LabelMatrix.from_labels(labels)
        L = laplacian_operator(build_graph(X, 5))
        cfg = IglConfig()
        assert objective(X, Y, np.zeros((8, 5)), L, cfg) == pytest.approx(cfg.lam * 20)

    def test_l21_term(self):
        cfg = IglConfig(lam=1.0, mu=0.6)
        X = np.zeros((2, 2))
        Y = LabelMatrix(np.eye(2), (0, 1))
        P = np.array([[3.0, 4.0], [0.0, 0.0]])
        base = objective(X, Y, np.zeros_like(P), np.zeros((2, 2)), cfg)
        assert objective(X, Y, P, np.zeros((2, 2)), cfg) - base == pytest.approx(0.6 * 5)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_double_sum(self, seed):
        X, labels = random_igl_instance(seed)
        X = normalize_columns(X)
        Y = LabelMatrix.from_labels(labels)
        cfg = IglConfig()
        g = build_graph(X, cfg.k)
        P = np.random.default_rng(seed).normal(size=(8, 5))
        Z = X.T @ P
        oracle = (
            laplacian_double_sum(Z, g.adjacency, g.degrees)
            + cfg.lam * float(((Z - Y.Y) ** 2).sum())
            + cfg.mu * sum(np.sqrt((row**2).sum()) for row in P)
        )
        assert objective(X, Y, P, laplacian_operator(g), cfg) == pytest.approx(oracle, abs=1e-8)


class TestFit:
    def test_separable_toy(self):
        X = np.array([[1.0, 1.2, -1.0, -1.1], [0.1, -0.1, 0.2, -0.2]])
        Y = LabelMatrix.from_labels([0, 0, 1, 1])
        cfg = IglConfig(mu=0.0, k=1)
        model = fit(X, Y, cfg)
        assert predict(model, X) == [0, 0, 1, 1]

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_objective_non_increasing_unsquared(self, seed):
        X, labels = random_igl_instance(seed)
        model = fit(X, LabelMatrix.from_labels(labels), IglConfig(b_update="unsquared"))
        obj = np.array(model.objectives)
        assert np.all(obj[1:] <= obj[:-1] * (1 + 1e-8))

    def test_squared_update_can_increase_objective(self):
        # the squared reweighting does not majorize the l2,1 term; this instance
        # undershoots the collapsed value lam * ||Y||^2 and climbs back to it
        X, labels = random_igl_instance(1069)
        model = fit(X, LabelMatrix.from_labels(labels), IglConfig(b_update="squared"))
        obj = np.array(model.objectives)
        assert np.max((obj[1:] - obj[:-1]) / obj[:-1]) == pytest.approx(2.0e-5, rel=0.01)
        assert obj[-1] == pytest.approx(0.1 * len(labels), rel=1e-8)

    def test_fixed_point(self):
        X, labels = random_igl_instance(5)
        Y = LabelMatrix.from_labels(labels)
        cfg = IglConfig()
        model = fit(X, Y, cfg)
        assert model.converged
        Xn = normalize_columns(X)
        L = laplacian_operator(build_graph(Xn, cfg.k))
        P_next = update_P(Xn, Y, L, update_B(model.P, cfg.b_update), cfg)
        assert np.abs(P_next - model.P).max() <= 10 * cfg.rel_tol

    def test_stationarity_and_b_range(self):
        X, labels = random_igl_instance(8)
        Y = LabelMatrix.from_labels(labels)
        cfg = IglConfig()
        model = fit(X, Y, cfg)
        Xn = normalize_columns(X)
        L = laplacian_operator(build_graph(Xn, cfg.k))
        resid = system_matrix(Xn, L, model.B_diag, cfg) @ model.P - cfg.lam * Xn @ Y.Y
        assert np.abs(resid).max() <= 1e-8
        assert np.all((model.B_diag > 0) & (model.B_diag <= 1e8))

    def test_ridge_free_least_squares(self):
        # points far apart make every exp(-d^2) underflow, so the literal operator is 0
        r = np.random.default_rng(2)
        X = r.normal(size=(3, 12)) * 100.0
        labels = np.arange(12) % 3
        Y = LabelMatrix.from_labels(labels)
        cfg = IglConfig(mu=0.0, laplacian="paper_literal", normalize_features=False)
        model = fit(X, Y, cfg)
        P_ls = np.linalg.solve(X @ X.T, X @ Y.Y)
        assert np.allclose(model.P, P_ls, rtol=1e-10, atol=1e-12)
        assert model.objectives[0] == model.objectives[1]

    def test_rejects_single_class(self):
        with pytest.raises(ValidationError):
            fit(np.eye(2), LabelMatrix.from_labels([0, 0]))

    def test_rejects_too_few_samples(self):
        Y = LabelMatrix(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]), (0, 1, 2))
        with pytest.raises(ValidationError):
            fit(np.eye(2), Y)


class TestPredict:
    def test_basis_vector(self):
        assert np.array_equal(predict_soft(_model(np.eye(3)), np.array([[0.0], [1.0], [0.0]])), [[0, 1, 0]])

    def test_empty(self):
        assert predict_soft(_model(np.eye(3)), np.zeros((3, 0))).shape == (0, 3)

    def test_dot_product_oracle(self, rng):
        P = rng.normal(size=(4, 3))
        Xt = rng.normal(size=(4, 6))
        S = predict_soft(_model(P), Xt)
        oracle = [[sum(Xt[d, m] * P[d, c] for d in range(4)) for c in range(3)] for m in range(6)]
        assert np.abs(S - oracle).max() <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            predict_soft(_model(np.eye(3)), np.zeros((2, 1)))

    def test_argmax_and_ties(self):
        model = _model(np.eye(3), classes=("x", "y", "z"))
        assert predict(model, np.array([[0.2], [0.7], [0.1]])) == ["y"]
        assert predict(_model(np.eye(2)), np.array([[0.5], [0.5]])) == [0]

    def test_compositional(self, rng):
        model = _model(rng.normal(size=(5, 4)), classes=("a", "b", "c", "d"))
        Xt = rng.normal(size=(5, 30))
        expected = [model.class_order[j] for j in np.argmax(predict_soft(model, Xt), axis=1)]
        assert predict(model, Xt) == expected

    @pytest.mark.parametrize("c", [1e-6, 0.5, 3.0, 1e4])
    def test_scale_invariance(self, rng, c):
        P = rng.normal(size=(5, 4))
        Xt = rng.normal(size=(5, 40))
        assert predict(_model(P), Xt) == predict(_model(c * P), Xt)
