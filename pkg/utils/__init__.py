# Utilities module
from .logger import setupLogger
from .seeding import childSeeds, substream
from .csvWriter import appendCsv, readCsv, writeCsv
