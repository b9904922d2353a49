"""Column layouts of the two public datasets.

Every index below is 0-based. Keep all dataset column arithmetic in this
file so an off-by-one can be audited in one place.
"""

# ---------------------------------------------------------------------------
# UCI "Daily and Sports Activities" (Altun & Barshan)
#
# Layout from the dataset README:
#   data/aXX/pY/sZZ.txt   XX = activity 01..19, Y = subject 1..8,
#                         ZZ = 5-second segment 01..60
#   each file: 125 rows (5 s at 25 Hz) x 45 comma-separated columns
#   columns 1-9 torso, 10-18 right arm, 19-27 left arm,
#           28-36 right leg, 37-45 left leg (1-based)
#   within each unit: x,y,z accelerometers, x,y,z gyroscopes,
#                     x,y,z magnetometers
# ---------------------------------------------------------------------------

DSADS_SAMPLE_RATE_HZ = 25
DSADS_ROWS_PER_SEGMENT = 125
DSADS_N_COLUMNS = 45
DSADS_COLUMNS_PER_UNIT = 9

DSADS_UNITS = ("T", "RA", "LA", "RL", "LL")


def dsads_accel_columns(unit):
    """Return the three accelerometer column indices of a sensor unit."""
    try:
        k = DSADS_UNITS.index(unit)
    except ValueError:
        raise ValueError(f"unknown DSADS unit {unit!r}; expected one of {DSADS_UNITS}") from None
    start = k * DSADS_COLUMNS_PER_UNIT
    return (start, start + 1, start + 2)


# a01 sitting, a02 standing, a03 lying on back, a04 lying on right side,
# a05 ascending stairs, a06 descending stairs, a07 standing in elevator,
# a08 moving around in elevator, a09 walking in parking lot,
# a10 treadmill 4 km/h flat, a11 treadmill 4 km/h 15 deg incline,
# a12 treadmill running 8 km/h, a13 stepper, a14 cross trainer,
# a15 exercise bike horizontal, a16 exercise bike vertical, a17 rowing,
# a18 jumping, a19 basketball
DSADS_DEFAULT_ACTIVITY_MAP = {
    "Bike": "a15",
    "Rest": "a01",
    "Run": "a12",
    "Walk": "a09",
}

# ---------------------------------------------------------------------------
# PAMAP2 Physical Activity Monitoring, Protocol/subject1NN.dat
#
# Layout from the dataset README (1-based columns):
#   1 timestamp (s), 2 activityID, 3 heart rate (bpm),
#   4-20 IMU hand, 21-37 IMU chest, 38-54 IMU ankle
#   within each IMU: 1 temperature, 2-4 3D acceleration (+-16 g),
#   5-7 3D acceleration (+-6 g), 8-10 gyroscope, 11-13 magnetometer,
#   14-17 orientation
#   missing values are written as NaN; activityID 0 marks transient periods
# ---------------------------------------------------------------------------

PAMAP2_SAMPLE_RATE_HZ = 100
PAMAP2_N_COLUMNS = 54
PAMAP2_ACTIVITY_COLUMN = 1
PAMAP2_IMU_START = {"hand": 3, "chest": 20, "ankle": 37}


def pamap2_accel_columns(imu="hand"):
    """Return the +-16 g accelerometer column indices of an IMU."""
    try:
        start = PAMAP2_IMU_START[imu]
    except KeyError:
        raise ValueError(f"unknown PAMAP2 IMU {imu!r}") from None
    return (start + 1, start + 2, start + 3)


# 1 lying, 2 sitting, 3 standing, 4 walking, 5 running, 6 cycling,
# 7 Nordic walking, 12 ascending stairs, 13 descending stairs,
# 16 vacuum cleaning, 17 ironing, 24 rope jumping
PAMAP2_DEFAULT_ACTIVITY_MAP = {
    "Bike": "6",
    "Rest": "1",
    "Walk": "4",
}
