"""
DFF Core: plugin support
"""

import os
from importlib import import_module
from importlib.machinery import all_suffixes
from typing import Any, Dict as TDict

from . import logger


__all__ = ['load_plugins']


# List of valid Python module suffixes
PY_SUFFIXES = all_suffixes()


def add_plugin(plugins: TDict[str, Any], descr: str, instance: Any) -> None:
    """
    Add a plugin instance to the plugin dictionary; adjust display name and
    check that there are no more plugins with the same name

    :param plugins: dictionary {name: instance}
    :param descr: plugin description
    :param instance: plugin class instance

    :return: None
    """
    name = getattr(instance, instance.__polymorphic_on__)
    if name in plugins and plugins[name] is not instance:
        raise RuntimeError(
            'Multiple {} plugins named "{}" are not allowed'.format(
                descr, name))

    if not getattr(instance, 'display_name', None):
        # noinspection PyBroadException
        try:
            instance.display_name = name
        except Exception:
            pass

    plugins[name] = instance

    logger.info('Loaded %s plugin "%s"', descr, name)


def load_plugins(descr: str, package: str, plugin_class: Any) \
        -> TDict[str, Any]:
    """
    Load and initialize plugins from the given directory

    :param descr: plugin description
    :param package: plugin package name relative to dff_core, e.g.
        "resources.toy_system_plugins"
    :param plugin_class: base plugin class; plugin classes are its subclasses
        that define a string value for the polymorphic attribute

    :return: dictionary containing plugin class instances with default
        parameters indexed by their unique names
    """
    directory = os.path.normpath(os.path.join(
        os.path.dirname(__file__), package.replace('.', os.path.sep)))
    logger.debug('Looking for %s plugins in %s', descr, directory)

    # noinspection PyBroadException
    try:
        dirlist = os.listdir(directory)
    except Exception:
        dirlist = []

    plugin_classes = {}
    for name in sorted({os.path.splitext(f)[0] for f in dirlist
                        if os.path.splitext(f)[1] in PY_SUFFIXES and
                        os.path.splitext(f)[0] != '__init__'}):
        # noinspection PyBroadException
        try:
            logger.debug('Checking module "%s"', name)
            # A potential plugin module is found; load it
            m = import_module('dff_core.{}.{}'.format(package, name))

            try:
                # Check only names listed in __all__
                items = (m.__dict__[_name] for _name in m.__dict__['__all__'])
            except KeyError:
                # If no __all__ is present in the module, check all globals
                items = m.__dict__.values()

            # Scan all items defined in the module, looking for classes
            # derived from "plugin_class"
            for item in items:
                try:
                    if issubclass(item, plugin_class) and \
                            item is not plugin_class and \
                            getattr(item, '__polymorphic_on__', None) and \
                            isinstance(getattr(
                                item, item.__polymorphic_on__, None), str) and \
                            item.__module__ == m.__name__:
                        plugin_classes[getattr(
                            item, item.__polymorphic_on__)] = item
                        logger.debug(
                            'Found %s plugin "%s"', descr,
                            getattr(item, item.__polymorphic_on__))
                except TypeError:
                    pass
        except Exception:
            # Ignore modules that could not be imported
            logger.warning(
                'Could not import %s plugin module "%s"', descr, name,
                exc_info=True)

    plugins = {}
    for name, klass in plugin_classes.items():
        # Initialize plugin instance; provide the polymorphic field equal
        # to plugin name to instantiate the appropriate subclass instead
        # of the base plugin class
        try:
            instance = klass(
                _set_defaults=True, **{klass.__polymorphic_on__: name})
        except Exception:
            logger.exception('Error loading %s plugin "%s"', descr, name)
            raise

        add_plugin(plugins, descr, instance)

    return plugins
