"""Physical constants for the classic control domains (Sutton & Barto formulations)."""
import math

# Mountain Car
MC_POS_MIN = -1.2
MC_POS_MAX = 0.5
MC_VEL_MAX = 0.07
MC_GOAL = 0.5
MC_FORCE = 0.001
MC_GRAVITY = 0.0025
MC_START_LOW = -0.6
MC_START_HIGH = -0.4
MC_HORIZON = 500

# Acrobot
AC_M1 = AC_M2 = 1.0
AC_L1 = AC_L2 = 1.0
AC_LC1 = AC_LC2 = 0.5
AC_I1 = AC_I2 = 1.0
AC_G = 9.8
AC_DT = 0.05
AC_SUBSTEPS = 4
AC_VEL1_MAX = 4 * math.pi
AC_VEL2_MAX = 9 * math.pi
AC_TORQUES = (-1.0, 0.0, 1.0)
AC_HORIZON = 500
