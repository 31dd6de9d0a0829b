#!/usr/bin/env python3
"""Regenerates the bundled fixtures under data/fixtures.

Everything is a closed-form function of the hour index, so reruns are
byte-identical. Usage: python3 tools/make_fixtures.py [data_dir]
"""
import math
import os
import sys
from datetime import datetime, timedelta, timezone


def wiggle(i, seed):
    # Smooth deterministic "noise" in [-1, 1].
    return (math.sin(i * 0.731 + seed) + math.sin(i * 0.197 + 2.1 * seed) + math.sin(i * 0.0533 + 3.7 * seed)) / 3.0


def ts(t):
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


CITIES = {
    # city: (utc offset for the diurnal cycle, annual mean C, seasonal amp, daily amp, mean RH, RH amp)
    "austin": (-6, 20.5, 9.5, 5.5, 65.0, 15.0),
    "dallas": (-6, 19.0, 10.5, 5.5, 62.0, 15.0),
    "phoenix": (-7, 24.0, 10.0, 7.0, 30.0, 22.0),
}


def weather_rows(start, hours, cities, drop):
    rows = []
    for i in range(hours):
        t = start + timedelta(hours=i)
        doy = t.timetuple().tm_yday
        for ci, city in enumerate(cities):
            if (city, i) in drop:
                continue
            off, mean, samp, damp, rh0, rhamp = CITIES[city]
            local_h = (t.hour + off) % 24
            season = -math.cos(2 * math.pi * (doy - 15) / 365.0)
            diurnal = math.cos(2 * math.pi * (local_h - 15) / 24.0)
            temp = mean + samp * season + damp * diurnal + 2.5 * wiggle(i, ci + 1)
            rh = rh0 - rhamp * diurnal - 6.0 * season + 8.0 * wiggle(i, ci + 7)
            rh = min(99.0, max(3.0, rh))
            rows.append(f"{ts(t)},{city},{temp:.1f},{rh:.1f}")
    return rows


FUELS = {
    "ERCO": [("COL", 9000, 1500), ("NG", 22000, 7000), ("NUC", 5000, 50), ("WND", 9000, 5000), ("SUN", 6000, 6000)],
    "AZPS": [("NG", 2500, 1200), ("NUC", 2800, 30), ("SUN", 1200, 1200)],
    "SRP": [("NG", 2200, 1000), ("COL", 1800, 300), ("WAT", 60, 120)],
}


def generation_rows(start, hours, bas, zero_hours=(), missing=()):
    rows = []
    for i in range(hours):
        t = start + timedelta(hours=i)
        for bi, ba in enumerate(bas):
            if (ba, i) in missing:
                continue
            for fi, (fuel, base, amp) in enumerate(FUELS[ba]):
                local_h = (t.hour - 6) % 24
                if fuel == "SUN":
                    v = max(0.0, amp * math.sin(math.pi * (local_h - 6) / 12.0)) if 6 <= local_h <= 18 else 0.0
                elif fuel == "WAT":
                    # Pumped storage: negative while pumping overnight.
                    v = base + amp * math.cos(2 * math.pi * (local_h - 18) / 24.0)
                else:
                    v = base + amp * 0.5 * (math.cos(2 * math.pi * (local_h - 17) / 24.0) + wiggle(i, 11 * bi + fi))
                if (ba, i) in zero_hours:
                    v = 0.0
                rows.append(f"{ts(t)},{ba},{fuel},{v:.1f}")
    return rows


def write(path, header, rows):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", newline="\n") as f:
        f.write(header + "\n")
        for r in rows:
            f.write(r + "\n")


def main():
    data = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "data")
    fx = os.path.join(data, "fixtures")

    # Synthetic year: 3 cities, 2 subregions, 3 balancing authorities.
    start = datetime(2023, 1, 1, tzinfo=timezone.utc)
    hours = 365 * 24
    drop = {("austin", 1000), ("austin", 1001)}                      # short gap, interpolated
    drop |= {("austin", 3000 + k) for k in range(6)}                  # long gap, stays missing
    drop |= {("dallas", 5000)}                                        # single missing hour
    drop |= {("phoenix", h) for h in range(0, 3)}                     # boundary gap
    write(os.path.join(fx, "year", "weather.csv"), "timestamp_utc,city,air_temp_c,relative_humidity_pct",
          weather_rows(start, hours, ["austin", "dallas", "phoenix"], drop))
    missing = {("AZPS", 4000), ("SRP", 4000)}
    zero = {("ERCO", 6000)}
    write(os.path.join(fx, "year", "generation.csv"), "timestamp_utc,balancing_authority,fuel,mwh",
          generation_rows(start, hours, ["ERCO", "AZPS", "SRP"], zero, missing))

    # Real-shaped week: Austin in early July, one balancing authority.
    wstart = datetime(2023, 7, 1, tzinfo=timezone.utc)
    whours = 7 * 24
    write(os.path.join(fx, "week", "weather.csv"), "timestamp_utc,city,air_temp_c,relative_humidity_pct",
          weather_rows(wstart, whours, ["austin"], set()))
    write(os.path.join(fx, "week", "generation.csv"), "timestamp_utc,balancing_authority,fuel,mwh",
          generation_rows(wstart, whours, ["ERCO"]))


if __name__ == "__main__":
    main()
