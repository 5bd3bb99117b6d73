"""
Constants for swinalign.
"""

NUM_GRADES = 5


class HeadKinds:
    """Constants for prediction head variants."""
    MPHN = "mphn"
    SPHN = "sphn"
    MLPREG = "mlpreg"

    ALL = (MPHN, SPHN, MLPREG)


class OptimizerKinds:
    """Constants for optimizer kinds."""
    ADAM = "adam"
    SGD = "sgd"

    ALL = (ADAM, SGD)


class Splits:
    """Constants for dataset split tags."""
    TRAIN = "train"
    VAL = "val"
    TEST = "test"

    ALL = (TRAIN, VAL, TEST)


class Magic:
    """Magic bytes of the binary file formats."""
    TENSOR = b"KTEN"
    CHECKPOINT = b"KCKP"
    DATASET = b"KDST"


FORMAT_VERSION = 1
