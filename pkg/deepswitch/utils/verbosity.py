import logging

ROOT_LOGGER = 'deepswitch'

class Verbosity(object):

    """Context manager setting the deepswitch log level to a fixed value."""

    def __init__(self, level, logger=ROOT_LOGGER):
        if isinstance(level, str):
            level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            raise ValueError("Unknown log level {}".format(level))
        self.level = level
        self.logger = logging.getLogger(logger)
        self.old_level = None

    def __enter__(self):
        self.old_level = self.logger.level
        self.logger.setLevel(self.level)
        return self

    def __exit__(self, *_):
        self.logger.setLevel(self.old_level)
