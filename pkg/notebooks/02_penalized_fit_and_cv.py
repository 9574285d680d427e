# Fit a synthetic survey of 30 households across a range of smoothing
# weights, then pick the weight by leave-one-out cross-validation.
import numpy as np

from hhnet.independence import independence_mle, product_distribution
from hhnet.likelihood import PenalizedObjectiveSpec
from hhnet.optimizer import fisher_standard_errors, maximize
from hhnet.selection import loo_cross_validate, parse_grid, select_lambda
from hhnet.simulation import COMPLETE, ELDER_CHILD_ISOLATE, PAPER_FREQUENCY, RespondentFrequency, dependent_scenario, simulate_sample

np.set_printoptions(precision=3, suppress=True)

truth = dependent_scenario()
data = simulate_sample(truth, 30, RespondentFrequency(PAPER_FREQUENCY), np.random.default_rng(7))
print("respondents:", [o.respondent.name for o in data[:10]], "...")

# Independence fit: one binomial proportion per dyad.
dyads = independence_mle(data)
print("eta:", dyads.eta)
q = product_distribution(dyads)

# Along the smoothing path the estimate moves from the unpenalized MLE
# toward the independence fit.
for lam in (0.0, 1.0, 5.0, 20.0, 100.0, 1e4):
    fit = maximize(PenalizedObjectiveSpec(data, lam))
    gap = np.abs(fit.p_hat - q).max()
    print(f"lambda={lam:>8g}  p(complete)={fit.p_hat[COMPLETE]:.3f}  "
          f"p(isolate)={fit.p_hat[ELDER_CHILD_ISOLATE]:.3f}  max|p - q|={gap:.3f}")

# Cross-validation over a coarse grid (the default grid is 0..40 by 0.5).
grid = parse_grid("0:40:2")
cv = loo_cross_validate(data, grid)
lam = select_lambda(cv)
print(np.column_stack([cv.grid, cv.mean_heldout_loglik]))
print("selected lambda:", lam)

spec = PenalizedObjectiveSpec(data, lam)
fit = maximize(spec)
top = np.argsort(fit.p_hat)[::-1][:5]
print("top networks:", top, fit.p_hat[top], "truth:", truth[top])

unc = fisher_standard_errors(fit, spec)
print("information rank", unc.info_matrix_rank, "invertible", unc.invertible)
