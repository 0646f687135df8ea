# Package marker for helper scripts.
# Purpose: keep script helpers runnable as `python -m scripts.<name>` from the repo root.
