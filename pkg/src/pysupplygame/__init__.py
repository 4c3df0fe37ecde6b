from pysupplygame.pysupplygame import SupplyChainLab
