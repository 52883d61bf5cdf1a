# Уровень логирования по умолчанию (DEBUG, INFO, WARNING, ERROR)
LOG_LEVEL = "INFO"

# Число воркеров для параллельных расчётов (None - все доступные ядра)
JOBS = None

# Зерно генератора случайных чисел, если --seed не указан
SEED = 1

# Сетка параметра gamma для DTW-ядра: логарифмический шаг в диапазоне [GAMMA_MIN, GAMMA_MAX]
GAMMA_MIN = 0.00002
GAMMA_MAX = 0.2
GAMMA_COUNT = 1000

# Сетка шума epsilon: от EPSILON_MIN до EPSILON_MAX с шагом EPSILON_STEP
EPSILON_MIN = 0.0001
EPSILON_MAX = 0.01
EPSILON_STEP = 0.0001

# Максимальная глубина усечения записи (оценка от T до T-12)
MAX_TRUNCATION = 12

# Порог отрицательной дисперсии, при котором настройка отбрасывается
NEGATIVE_VARIANCE_TOL = 1e-8

# Допуск для проверки положительной полуопределённости матрицы Грама
PSD_TOL = 1e-8

# Исключать травмы в первые N дней сезона
EARLY_INJURY_DAYS = 3

# Позиции, которые исключаются из выборки (вратари)
EXCLUDE_POSITIONS = ["goalkeeper"]

# Параметры генетического алгоритма для отбора признаков
GA_POPULATION = 50
GA_GENERATIONS = 1000
GA_CROSSOVER_P = 0.7
GA_MUTATION_P = 0.05

# Повторная кросс-валидация: 10 повторов по 10 фолдов
CV_REPEATS = 10
CV_FOLDS = 10
CV_STRATIFIED = True

# Параметры IRLS для обобщённых линейных моделей
IRLS_TOL = 1e-10
IRLS_MAX_ITER = 100
IRLS_MAX_HALVINGS = 20

# Запасная ridge-регуляризация при расходимости логистической регрессии
RIDGE_FALLBACK = 1e-6
