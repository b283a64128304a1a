"""
Statistical feedback on discriminator features
==============================================

The feedback generator adds two terms to the adversarial loss. Both compare
batch statistics of the discriminator's last hidden layer on real and
generated rows. The first matches means and standard deviations, the second
matches correlation matrices. Here are both on hand-made feature batches,
followed by the finite-difference check that keeps the gradients honest.
"""
import numpy as np

from tabsynth.genmodels import losses as L
from tabsynth.numerics import SeededRng, finite_diff_gradient, max_relative_error

# %% mean/std feedback: real {0, 2} has mu=1, sd=1; generated {0, 0} has mu=0, sd=0
print(L.mv_feedback(np.array([[0.0], [2.0]]), np.array([[0.0], [0.0]])))  # 2.0

# %% correlation feedback: +1 vs -1 off the diagonal, twice, squared
t = np.array([0.0, 1.0, 2.0])
print(L.corr_feedback(np.column_stack([t, t]), np.column_stack([t, -t])))  # 8.0

# %% the full generator loss at sigma(logit)=0.5 with unit weights
adv = L.adversarial_loss_g([0.0, 0.0])
print(adv, L.generator_loss(adv, 2.0, 8.0, 1.0, 1.0))  # -0.693, 9.307

# %% gradients with respect to the generated features against central differences
rng = SeededRng(0)
Fr, Fg = rng.normal((16, 5)), rng.normal((16, 5))
for f, g in [(L.mv_feedback, L.mv_feedback_grad), (L.corr_feedback, L.corr_feedback_grad)]:
    numeric = finite_diff_gradient(lambda X: f(Fr, X), Fg.copy())
    print(f.__name__, "max rel. error", max_relative_error(g(Fr, Fg), numeric))

# %% feedback pulls generated statistics toward the real ones
# plain gradient descent on the generated batch alone, no networks involved
Fg = rng.normal((64, 3), scale=3.0)
Fr = rng.normal((64, 3))
Fr[:, 1] = Fr[:, 0] + 0.1 * Fr[:, 1]
for step in range(301):
    grad = L.mv_feedback_grad(Fr, Fg) + L.corr_feedback_grad(Fr, Fg)
    Fg -= 2.0 * grad
    if step % 100 == 0:
        print(step, round(L.mv_feedback(Fr, Fg), 4), round(L.corr_feedback(Fr, Fg), 4))
