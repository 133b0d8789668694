# %% [markdown]
# # Relative changes in downstream results
#
# When synthetic speech is used to augment training data, results are
# compared across training conditions. The two relative-change conventions
# give different numbers for the same pair, so the output always names the
# one used.

# %%
from pathlib import Path

from dysfair.downstream import (
    ChangeConvention,
    compare_conditions,
    load_result_tables,
    relative_change,
    render_comparison,
)

# run from the repository root or from notebooks/
data = Path("notebooks/data/results.json")
if not data.exists():
    data = Path("data/results.json")
tables = load_result_tables(data.read_text(encoding="utf-8"))

# %% [markdown]
# ## Change measured against the old value

# %%
print(render_comparison(tables, "model1", "model3", ChangeConvention.RELATIVE_TO_OLD))

# %% [markdown]
# ## Reduction measured against the new value
# For error rates, a drop from 53.00 to 36.66 is a 30.8% cut relative to the
# old value but a 44.6% figure relative to the new one.

# %%
print(relative_change(53.00, 36.66, "old"))
print(relative_change(53.00, 36.66, "new"))
print(compare_conditions(tables[0], "model1", "model3", "new"))
