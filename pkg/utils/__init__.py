"""
Утилиты: контейнер LFRB, YAML-манифесты, CSV/JSON-артефакты, пул потоков, замер времени.
"""
