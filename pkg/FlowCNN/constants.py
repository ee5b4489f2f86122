# constants.py
#
# Numerical defaults and file format constants
################################################################################
import numpy as np

# Activations / parameters
DTYPE = np.float32
LEAKY_SLOPE = 0.1

# Charbonnier penalty
CHARBONNIER_EPS = 1e-3

# ADAM
LEARNING_RATE = 1e-4
BETA1 = 0.9
BETA2 = 0.999
EPS_ADAM = 1e-8

# Training
BATCH_SIZE = 8
EPOCHS = 1
CROP_SIZE = (128, 96)          # (height, width)

# Inference
ITERATIONS_PER_SCALE = 4
MEDIAN_RADIUS = 2
MIN_COARSE_SIDE = 32
NET_DIVISOR = 16               # 4 stride-2 layers

# Evaluation
LARGE_MOTION = 5.0             # pixels

# Middlebury .flo
FLO_TAG = 202021.25

# Checkpoints
CHECKPOINT_MAGIC = b"USCN"
CHECKPOINT_VERSION = 1

# Luma weights for colour inputs
LUMA = (0.299, 0.587, 0.114)
