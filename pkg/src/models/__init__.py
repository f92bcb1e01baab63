"""
Modelos de datos: grafos, parámetros, prompts, planes de ataque, informes,
configuración y estado del experimento.
"""
