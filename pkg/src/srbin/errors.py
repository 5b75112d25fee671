"""Exception hierarchy.

Every error raised on purpose by this package derives from :class:`SrBinError`,
which the CLI maps to exit code 2.
"""


class SrBinError(Exception):
    pass


class UnsupportedFormat(SrBinError):
    pass


class CorruptImage(SrBinError):
    pass


class ChannelsMismatch(SrBinError):
    pass


class SizeMismatch(SrBinError):
    pass


class ImageTooSmall(SrBinError):
    pass


class InvalidKernel(SrBinError, ValueError):
    pass


class EmptyHistogram(SrBinError, ValueError):
    pass




class ExternalOutputMissing(SrBinError):
    pass


class ExternalSizeMismatch(SrBinError):
    pass


class EmptyDataset(SrBinError):
    pass


class EmptyInput(SrBinError, ValueError):
    pass


class ConfigInvalid(SrBinError, ValueError):
    pass


class EvenWindow(ConfigInvalid):
    pass


class AllEntriesFailed(SrBinError):
    pass
