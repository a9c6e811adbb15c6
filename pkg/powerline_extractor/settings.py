"""
Django settings for powerline_extractor project.

Every extraction default lives in WIRE_EXTRACTION below and can be overridden
from the environment (or a .env file next to manage.py) as WIRE_<KEY>.

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
import environ

# Initialize environment variables
env = environ.Env()
environ.Env.read_env()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env('SECRET_KEY', default='django-insecure-w1re-extract10n-l0cal-dev-only')

DEBUG = env.bool('DEBUG', default=False)

ALLOWED_HOSTS = env.list('ALLOWED_HOSTS', default=['localhost', '127.0.0.1', 'testserver'])


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',

    # Custom apps
    'catenary',
    'wires',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'powerline_extractor.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'powerline_extractor.wsgi.application'


# Database
# SQLite by default; point DATABASE_URL at PostgreSQL for shared run history.

DATABASES = {
    'default': env.db('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}"),
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files (admin only)

STATIC_URL = '/static/'
STATIC_ROOT = BASE_DIR / 'staticfiles'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# The run API reuses the admin login page
LOGIN_URL = 'admin:login'


# Wire extraction defaults. Lengths are meters, angles degrees.

WIRE_EXTRACTION = {
    'WIRE_CLASS_CODE': env.int('WIRE_CLASS_CODE', default=14),
    'POINT_TOLERANCE': env.float('WIRE_POINT_TOLERANCE', default=0.8),
    'WIRE_SEPARATION': env.float('WIRE_SEPARATION', default=1.0),
    'MAX_SAMPLING_GAP': env.float('WIRE_MAX_SAMPLING_GAP', default=15.0),
    'OUTPUT_LINE_TOLERANCE': env.float('WIRE_OUTPUT_LINE_TOLERANCE', default=0.01),
    'WIND_CORRECTION': env.bool('WIRE_WIND_CORRECTION', default=True),
    'MIN_WIND_SPAN': env.float('WIRE_MIN_WIND_SPAN', default=60.0),
    'MAX_DEVIATION_ANGLE': env.float('WIRE_MAX_DEVIATION_ANGLE', default=10.0),
    'END_POINT_SEARCH_RADIUS': env.float('WIRE_END_POINT_SEARCH_RADIUS', default=10.0),
    'MIN_WIRE_LENGTH': env.float('WIRE_MIN_WIRE_LENGTH', default=5.0),
    'N_MIN': env.int('WIRE_N_MIN', default=5),
    'N_MAX': env.int('WIRE_N_MAX', default=50),
    'RATIO_THRESHOLD': env.float('WIRE_RATIO_THRESHOLD', default=0.25),
    # None means "same as N_MIN"
    'SMALL_PARTITION_SIZE': env.int('WIRE_SMALL_PARTITION_SIZE', default=None),
    'MERGE_RMS_FACTOR': env.float('WIRE_MERGE_RMS_FACTOR', default=1.25),
    'MAX_ROUNDS': env.int('WIRE_MAX_ROUNDS', default=20),
    'MIN_FIT_POINTS': env.int('WIRE_MIN_FIT_POINTS', default=8),
    'CLOSEST_POINT_METHOD': env('WIRE_CLOSEST_POINT_METHOD', default='circle'),
    'SEGMENT_WINDOW': env.int('WIRE_SEGMENT_WINDOW', default=400),
    'N_JOBS': env.int('WIRE_N_JOBS', default=1),
}


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'catenary': {
            'handlers': ['console'],
            'level': env('WIRE_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
        'wires': {
            'handlers': ['console'],
            'level': env('WIRE_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
    },
}
