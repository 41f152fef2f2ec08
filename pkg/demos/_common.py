"""Small helpers shared by the demo scripts."""

import datetime as dt

import numpy as np

from quantcond.data_io import ReturnPanel


def trading_days(n, start=dt.date(2014, 1, 2)):
    days, day = [], start
    while len(days) < n:
        if day.weekday() < 5:
            days.append(day)
        day += dt.timedelta(days=1)
    return tuple(days)


def panel_from_array(x, tickers=None):
    x = np.asarray(x, dtype=float)
    tickers = tickers or tuple(f"X{i + 1}" for i in range(x.shape[1]))
    return ReturnPanel(trading_days(len(x)), tuple(tickers), x)
