"""
Algoritmos del laboratorio: grafos, métricas, GCN, prompts, ataque, defensas y evaluación.
"""
